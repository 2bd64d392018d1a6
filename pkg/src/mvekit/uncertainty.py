"""Dynamics models and predictive-uncertainty estimators.

All models map (observation ++ one-hot action) to the next observation.
Estimators reduce per-dimension variances to a scalar by summing them
(the trace of the diagonal covariance).
"""

import numpy as np

from . import nn
from .envs import N_ACTIONS, OBS_DIM, true_successor


def encode_inputs(obs, actions):
    """Stack observations with one-hot actions into model inputs."""
    obs = np.atleast_2d(np.asarray(obs, dtype=np.float64))
    actions = np.atleast_1d(np.asarray(actions, dtype=np.int64))
    x = np.zeros((obs.shape[0], obs.shape[1] + N_ACTIONS))
    x[:, : obs.shape[1]] = obs
    x[np.arange(len(actions)), obs.shape[1] + actions] = 1.0
    return x


class TrueDynamicsModel:
    """The real dynamics wrapped in the model interface; zero variance.

    Used to validate rollouts and the oracle-weighting machinery against a
    model that cannot be wrong."""

    def predict(self, x):
        obs = x[:, :OBS_DIM]
        actions = np.argmax(x[:, OBS_DIM:], axis=1)
        mean = np.stack(
            [true_successor(obs[i], int(actions[i])) for i in range(len(actions))]
        )
        var = np.zeros_like(mean)
        return mean, var, np.zeros(len(actions))


class DeterministicModel:
    """Point-prediction dynamics model trained with squared error."""

    def __init__(self, net):
        self.net = net
        self.opt = nn.AdamState.for_params(net.parameters())

    @classmethod
    def create(cls, hidden, rng, in_dim=OBS_DIM + N_ACTIONS, out_dim=OBS_DIM):
        return cls(nn.Mlp.create([in_dim, *hidden, out_dim], rng))

    def predict(self, x):
        """Returns (mean, per-dim var, scalar var); variances are zero."""
        mean, _ = nn.forward(self.net, x)
        var = np.zeros_like(mean)
        return mean, var, np.zeros(mean.shape[0])


class HeteroModel:
    """Separate mean and pre-variance networks, jointly optimized.

    Predicted variances go through softplus with a 1e-6 floor, so they are
    strictly positive; the scalar uncertainty is their sum over dimensions.
    """

    def __init__(self, mean_net, var_net, loss="trace"):
        if mean_net.in_dim != var_net.in_dim or mean_net.out_dim != var_net.out_dim:
            raise ValueError("mean and variance networks must share in/out dims")
        self.mean_net = mean_net
        self.var_net = var_net
        self.loss = loss  # "trace": Mahalanobis+logdet; "half": its 1-D halved form
        self.opt = nn.AdamState.for_params(self.parameters())

    @classmethod
    def create(
        cls,
        hidden,
        rng,
        var_hidden=None,
        in_dim=OBS_DIM + N_ACTIONS,
        out_dim=OBS_DIM,
        loss="trace",
    ):
        mean_net = nn.Mlp.create([in_dim, *hidden, out_dim], rng)
        var_net = nn.Mlp.create([in_dim, *(var_hidden or hidden), out_dim], rng)
        return cls(mean_net, var_net, loss=loss)

    def parameters(self):
        return self.mean_net.parameters() + self.var_net.parameters()

    def predict(self, x):
        mean, _ = nn.forward(self.mean_net, x)
        pre, _ = nn.forward(self.var_net, x)
        var = nn.softplus_floor(pre)
        return mean, var, var.sum(axis=1)

    def loss_and_grads(self, x, target):
        """Mean NLL over the batch and its parameter gradients."""
        x = np.ascontiguousarray(x, dtype=np.float64)
        target = np.asarray(target, dtype=np.float64)
        mean, mean_cache = nn.forward(self.mean_net, x)
        pre, var_cache = nn.forward(self.var_net, x)
        var = nn.softplus_floor(pre)
        if self.loss == "trace":
            losses, d_mu, d_var = nn.diag_gaussian_nll(mean, var, target)
            scale = x.shape[0]
        else:
            losses, d_mu, d_var = nn.hetero_nll_1d(target, mean, var)
            scale = losses.size
        loss = float(np.mean(losses))
        d_mu = d_mu / scale
        d_pre = (d_var / scale) * nn.softplus_floor_grad(pre)
        grads = nn.backward(self.mean_net, mean_cache, d_mu) + nn.backward(
            self.var_net, var_cache, d_pre
        )
        return loss, grads

    def update_arrays(self, x, target, lr):
        """One joint Adam step on the Gaussian NLL; returns the pre-step loss."""
        loss, grads = self.loss_and_grads(x, target)
        nn.adam_step(self.parameters(), grads, self.opt, lr)
        return loss


class DropoutModel:
    """Single network; predictive uncertainty from stochastic forward passes."""

    def __init__(self, net, p=0.1, passes=10):
        if passes < 1:
            raise ValueError("need at least one stochastic pass")
        self.net = net
        self.spec = nn.DropoutSpec(p)
        self.passes = passes
        self.opt = nn.AdamState.for_params(net.parameters())

    @classmethod
    def create(cls, hidden, rng, p=0.1, passes=10, in_dim=OBS_DIM + N_ACTIONS, out_dim=OBS_DIM):
        return cls(nn.Mlp.create([in_dim, *hidden, out_dim], rng), p=p, passes=passes)

    def predict_mc(self, x, rng):
        """Mean and population variance over `passes` mask-active forwards."""
        if self.spec.p == 0.0:
            # no stochasticity: every pass is the same forward
            mean, _ = nn.forward(self.net, x)
            var = np.zeros_like(mean)
            return mean, var, np.zeros(mean.shape[0])
        outs = []
        for _ in range(self.passes):
            out, _ = nn.forward(self.net, x, dropout=self.spec, rng=rng)
            outs.append(out)
        stack = np.stack(outs)
        mean = stack.mean(axis=0)
        var = stack.var(axis=0)
        return mean, var, var.sum(axis=1)


class EnsembleModel:
    """K independently initialized members, optionally with frozen additive priors.

    Member predictions are `trainable(x) + prior_scale * prior(x)` when priors
    are present.  Disagreement across members estimates parameter uncertainty.
    """

    def __init__(self, members, priors=None, prior_scale=1.0, bootstraps=None):
        if not members:
            raise ValueError("ensemble needs at least one member")
        if priors is not None and len(priors) != len(members):
            raise ValueError("need one prior per member")
        self.members = members
        self.priors = priors
        self.prior_scale = prior_scale
        self.bootstraps = bootstraps

    @classmethod
    def create(
        cls,
        n_members,
        hidden,
        rng,
        hetero=False,
        var_hidden=None,
        with_priors=False,
        prior_scale=1.0,
        in_dim=OBS_DIM + N_ACTIONS,
        out_dim=OBS_DIM,
        loss="trace",
    ):
        if hetero:
            members = [
                HeteroModel.create(
                    hidden, rng, var_hidden=var_hidden, in_dim=in_dim, out_dim=out_dim, loss=loss
                )
                for _ in range(n_members)
            ]
        else:
            members = [
                DeterministicModel.create(hidden, rng, in_dim=in_dim, out_dim=out_dim)
                for _ in range(n_members)
            ]
        priors = None
        if with_priors:
            priors = [nn.Mlp.create([in_dim, *hidden, out_dim], rng) for _ in range(n_members)]
        return cls(members, priors=priors, prior_scale=prior_scale)

    def __len__(self):
        return len(self.members)

    @property
    def hetero(self):
        return isinstance(self.members[0], HeteroModel)

    def _member_mean(self, k, x):
        member = self.members[k]
        net = member.mean_net if isinstance(member, HeteroModel) else member.net
        mean, _ = nn.forward(net, x)
        if self.priors is not None:
            prior_out, _ = nn.forward(self.priors[k], x)
            mean = mean + self.prior_scale * prior_out
        return mean

    def member_means(self, x):
        return np.stack([self._member_mean(k, x) for k in range(len(self.members))])

    def predict(self, x):
        """Ensemble mean plus the population variance of member means."""
        means = self.member_means(x)
        mean = means.mean(axis=0)
        var = means.var(axis=0)
        return mean, var, var.sum(axis=1)

    def predict_mixture(self, x):
        """Uniform mixture over per-member Gaussians, per dimension."""
        if not self.hetero:
            raise ValueError("mixture variance needs heteroscedastic members")
        means = self.member_means(x)
        member_vars = []
        for member in self.members:
            pre, _ = nn.forward(member.var_net, x)
            member_vars.append(nn.softplus_floor(pre))
        variances = np.stack(member_vars)
        mix_mean = means.mean(axis=0)
        mix_var = (variances + means * means).mean(axis=0) - mix_mean * mix_mean
        return mix_mean, mix_var, mix_var.sum(axis=1)

    def prior_snapshot(self):
        """Copies of all prior parameters (for freeze checks)."""
        if self.priors is None:
            return None
        return [[p.copy() for p in prior.parameters()] for prior in self.priors]


def _mse_adam_step(net, opt, x, target, lr, prior_out=None, dropout=None, rng=None):
    """Shared squared-error Adam step; prior output is added to the prediction."""
    pred, cache = nn.forward(net, x, dropout=dropout, rng=rng)
    if prior_out is not None:
        pred = pred + prior_out
    loss, d_pred = nn.mse_loss(pred, target)
    grads = nn.backward(net, cache, d_pred)
    nn.adam_step(net.parameters(), grads, opt, lr)
    return loss


def update_deterministic_arrays(model, x, target, lr):
    return _mse_adam_step(model.net, model.opt, x, target, lr)


def update_ensemble_member_arrays(ensemble, k, x, target, lr):
    """One MSE or NLL step for member k; priors contribute to the prediction
    but never receive gradients."""
    member = ensemble.members[k]
    if isinstance(member, HeteroModel):
        if ensemble.priors is not None:
            raise ValueError("priors are only supported for squared-error members")
        return member.update_arrays(x, target, lr)
    prior_out = None
    if ensemble.priors is not None:
        prior_out, _ = nn.forward(ensemble.priors[k], x)
        prior_out = ensemble.prior_scale * prior_out
    return _mse_adam_step(member.net, member.opt, x, target, lr, prior_out=prior_out)


def update_dropout_arrays(model, x, target, lr, rng):
    """Squared-error step with dropout active (its usual training regularizer)."""
    return _mse_adam_step(model.net, model.opt, x, target, lr, dropout=model.spec, rng=rng)


# --- transition-batch update entry points ---


def _batch_arrays(batch):
    x = encode_inputs(batch.s, batch.a)
    return x, np.asarray(batch.s_next, dtype=np.float64)


def hetero_update(model, batch, lr):
    """One joint Adam step toward the next observations; returns pre-step loss."""
    if len(batch.a) == 0:
        raise ValueError("empty batch")
    x, target = _batch_arrays(batch)
    return model.update_arrays(x, target, lr)


def deterministic_update(model, batch, lr):
    """One Adam step on squared error toward the next observations."""
    if len(batch.a) == 0:
        raise ValueError("empty batch")
    x, target = _batch_arrays(batch)
    return update_deterministic_arrays(model, x, target, lr)


def ensemble_update(ensemble, batches, lr):
    """One step per member, each on its own batch; returns the mean loss."""
    if len(batches) != len(ensemble.members):
        raise ValueError("need one batch per member")
    losses = []
    for k, batch in enumerate(batches):
        x, target = _batch_arrays(batch)
        losses.append(update_ensemble_member_arrays(ensemble, k, x, target, lr))
    return float(np.mean(losses))


# --- single state-action prediction surface ---


def hetero_predict(model, s, a):
    """(mean, per-dim variance, trace) at one state-action pair."""
    mean, var, scalar = model.predict(encode_inputs(s, a))
    return mean[0], var[0], float(scalar[0])


def ensemble_predict(ensemble, s, a):
    """(member-mean average, population variance across members, trace)."""
    mean, var, scalar = ensemble.predict(encode_inputs(s, a))
    return mean[0], var[0], float(scalar[0])


def combined_predict(ensemble, s, a):
    """Uniform-mixture mean/variance for an ensemble of heteroscedastic members."""
    mean, var, scalar = ensemble.predict_mixture(encode_inputs(s, a))
    return mean[0], var[0], float(scalar[0])


def mc_dropout_predict(model, s, a, rng):
    """(mean, per-dim variance, trace) over stochastic forward passes."""
    mean, var, scalar = model.predict_mc(encode_inputs(s, a), rng)
    return mean[0], var[0], float(scalar[0])


def bootstrap_datasets(data, n_sets, rng):
    """Resample the dataset with replacement, once per ensemble member."""
    if len(data) == 0:
        raise ValueError("empty dataset")
    if n_sets < 1:
        raise ValueError("need at least one bootstrap")
    n = len(data)
    return [[data[i] for i in rng.integers(0, n, size=n)] for _ in range(n_sets)]
