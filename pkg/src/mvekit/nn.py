"""Minimal dense-network core: MLP forward/backward, losses, optimizers.

Everything is float64 and deterministic given the supplied numpy Generator.
Parameter lists follow the convention `net.parameters() == weights + biases`,
and gradient lists returned by :func:`backward` line up with that order.
"""

from dataclasses import dataclass, field

import numpy as np

from . import backend

VAR_FLOOR = 1e-6

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
RMSPROP_DECAY = 0.99
RMSPROP_EPS = 1e-8


def glorot_init(fan_in, fan_out, rng):
    """Uniform Glorot matrix on [-L, L] with L = sqrt(6 / (fan_in + fan_out))."""
    if fan_in < 1 or fan_out < 1:
        raise ValueError(f"glorot_init needs positive dims, got ({fan_in}, {fan_out})")
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


@dataclass
class DropoutSpec:
    """Inverted dropout: drop hidden units with probability p, scale survivors."""

    p: float

    def __post_init__(self):
        if not 0.0 <= self.p < 1.0:
            raise ValueError(f"dropout probability must be in [0, 1), got {self.p}")


@dataclass
class ForwardCache:
    """Activations/pre-activations/masks retained for the backward pass."""

    net_id: int
    acts: list
    preacts: list
    masks: list | None
    inv_keep: float


class Mlp:
    """Feed-forward network: ReLU hidden layers, identity output layer."""

    def __init__(self, layer_sizes, weights, biases):
        self.layer_sizes = tuple(int(s) for s in layer_sizes)
        self.weights = weights
        self.biases = biases

    @classmethod
    def create(cls, layer_sizes, rng):
        """Glorot-initialized weights, zero biases."""
        sizes = [int(s) for s in layer_sizes]
        if len(sizes) < 2 or any(s < 1 for s in sizes):
            raise ValueError(f"bad layer sizes {layer_sizes}")
        weights = [glorot_init(a, b, rng) for a, b in zip(sizes[:-1], sizes[1:])]
        biases = [np.zeros(b) for b in sizes[1:]]
        return cls(sizes, weights, biases)

    @property
    def in_dim(self):
        return self.layer_sizes[0]

    @property
    def out_dim(self):
        return self.layer_sizes[-1]

    def parameters(self):
        return self.weights + self.biases

    def copy(self):
        return Mlp(
            self.layer_sizes,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
        )

    def load_from(self, other):
        """Copy parameter values in from a same-shaped network."""
        if other.layer_sizes != self.layer_sizes:
            raise ValueError("architecture mismatch")
        for dst, src in zip(self.parameters(), other.parameters()):
            np.copyto(dst, src)


def forward(net, x, dropout=None, rng=None):
    """Batch forward pass; returns (output, cache for backward).

    With a DropoutSpec, hidden units are zeroed with probability p and
    survivors scaled by 1/(1-p), masks drawn from `rng`.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != net.in_dim:
        raise ValueError(f"input shape {x.shape} does not match in_dim {net.in_dim}")
    masks = None
    inv_keep = 1.0
    if dropout is not None and dropout.p > 0.0:
        if rng is None:
            raise ValueError("dropout with p > 0 needs an rng for masks")
        inv_keep = 1.0 / (1.0 - dropout.p)
        masks = [
            (rng.random((x.shape[0], w.shape[1])) >= dropout.p).astype(np.float64)
            for w in net.weights[:-1]
        ]
    out, acts, preacts = backend.mlp_forward(x, net.weights, net.biases, masks, inv_keep)
    return out, ForwardCache(id(net), acts, preacts, masks, inv_keep)


def backward(net, cache, d_out):
    """Gradients of `forward` composed with upstream dL/d(out).

    Returns a parameter-ordered list (weight grads then bias grads).
    """
    if cache.net_id != id(net):
        raise ValueError("cache does not belong to this network")
    d_out = np.ascontiguousarray(d_out, dtype=np.float64)
    if d_out.shape != (cache.acts[0].shape[0], net.out_dim):
        raise ValueError(f"upstream gradient shape {d_out.shape} mismatch")
    d_weights, d_biases = backend.mlp_backward(
        net.weights, cache.acts, cache.preacts, cache.masks, cache.inv_keep, d_out
    )
    return d_weights + d_biases


def mse_loss(pred, target):
    """Mean squared error over all entries; returns (loss, dL/dpred)."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {target.shape}")
    diff = pred - target
    loss = float(np.mean(diff * diff))
    return loss, (2.0 / diff.size) * diff


def hetero_nll_1d(y, mu, var):
    """Gaussian NLL with input-dependent variance (up to a constant):

        (y - mu)^2 / (2 var) + log(var) / 2

    Elementwise on arrays; returns (loss, dL/dmu, dL/dvar).
    """
    y = np.asarray(y, dtype=np.float64)
    mu = np.asarray(mu, dtype=np.float64)
    var = np.asarray(var, dtype=np.float64)
    if np.any(var <= 0.0):
        raise ValueError("variance must be strictly positive")
    resid = y - mu
    loss = resid * resid / (2.0 * var) + 0.5 * np.log(var)
    d_mu = -resid / var
    d_var = -resid * resid / (2.0 * var * var) + 0.5 / var
    if loss.ndim == 0:
        return float(loss), float(d_mu), float(d_var)
    return loss, d_mu, d_var


def diag_gaussian_nll(mu, var, target):
    """Mahalanobis distance plus log-determinant for a diagonal covariance:

        sum_d (mu_d - target_d)^2 / var_d  +  sum_d log(var_d)

    1-D inputs give a scalar loss; 2-D inputs are treated row-wise.
    Returns (loss, dL/dmu, dL/dvar), gradients per entry.
    """
    mu = np.asarray(mu, dtype=np.float64)
    var = np.asarray(var, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if mu.shape != var.shape or mu.shape != target.shape:
        raise ValueError("mu, var, target must share a shape")
    if np.any(var <= 0.0):
        raise ValueError("variance must be strictly positive")
    resid = mu - target
    loss = np.sum(resid * resid / var + np.log(var), axis=-1)
    d_mu = 2.0 * resid / var
    d_var = -resid * resid / (var * var) + 1.0 / var
    if loss.ndim == 0:
        return float(loss), d_mu, d_var
    return loss, d_mu, d_var


def softplus_floor(z):
    """log(1 + exp(z)) + 1e-6, overflow-safe; strictly positive everywhere."""
    z = np.asarray(z, dtype=np.float64)
    return np.logaddexp(0.0, z) + VAR_FLOOR


def softplus_floor_grad(z):
    """Derivative of softplus_floor: the logistic sigmoid."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _like_params(params):
    return [np.zeros_like(p) for p in params]


@dataclass
class AdamState:
    """First/second-moment accumulators plus the step counter."""

    m: list
    v: list
    t: int = 0
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS

    @classmethod
    def for_params(cls, params, **kw):
        return cls(m=_like_params(params), v=_like_params(params), **kw)


@dataclass
class RmsPropState:
    """Squared-gradient accumulator."""

    acc: list
    decay: float = RMSPROP_DECAY
    eps: float = RMSPROP_EPS

    @classmethod
    def for_params(cls, params, **kw):
        return cls(acc=_like_params(params), **kw)


def _check_shapes(params, grads, accs):
    if len(params) != len(grads):
        raise ValueError("params/grads length mismatch")
    for p, g in zip(params, grads):
        if p.shape != g.shape:
            raise ValueError(f"param/grad shape mismatch {p.shape} vs {g.shape}")
    for acc in accs:
        if len(acc) != len(params):
            raise ValueError("optimizer state does not match params")


def adam_step(params, grads, state, lr):
    """One bias-corrected Adam step, in place; increments state.t."""
    _check_shapes(params, grads, (state.m, state.v))
    state.t += 1
    backend.adam_step(
        params, grads, state.m, state.v, state.t, lr, state.beta1, state.beta2, state.eps
    )
    return params


def rmsprop_step(params, grads, state, lr):
    """One RMSProp step, in place."""
    _check_shapes(params, grads, (state.acc,))
    backend.rmsprop_step(params, grads, state.acc, lr, state.decay, state.eps)
    return params
