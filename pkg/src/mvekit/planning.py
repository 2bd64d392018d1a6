"""Control algorithms: DQN, model-based value expansion (MVE), and selective
MVE with uncertainty-weighted multi-step TD targets.

Multi-step targets take the form

    U_h = sum_{t<=h} gamma^(t-1) r_t + gamma^h max_a q_target(s_h, a)

and the selective variant averages them with softmax(-cumvar_h / tau)
weights, so rollout horizons with low predicted uncertainty dominate.
The first step of every rollout is the real buffered transition; the model
only extends the trajectory beyond it (its variance at the root state-action
still enters the weights, so horizons stay comparable).
"""

from dataclasses import dataclass

import numpy as np

from . import nn
from .envs import N_ACTIONS, OBS_DIM, terminal_from_observation
from .uncertainty import encode_inputs

WEIGHT_MODES = ("uniform", "learned-variance", "ensemble-variance", "oracle", "combined")


@dataclass
class Transition:
    s: np.ndarray
    a: int
    r: float
    s_next: np.ndarray
    terminal: bool
    truncated: bool = False

    def __post_init__(self):
        if self.terminal and self.truncated:
            raise ValueError("a transition cannot be both terminal and truncated")


@dataclass
class TransitionBatch:
    s: np.ndarray
    a: np.ndarray
    r: np.ndarray
    s_next: np.ndarray
    terminal: np.ndarray
    truncated: np.ndarray

    def __len__(self):
        return len(self.a)


class ReplayBuffer:
    """Fixed-capacity ring buffer with uniform with-replacement sampling."""

    def __init__(self, capacity):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.s = np.zeros((capacity, OBS_DIM))
        self.a = np.zeros(capacity, dtype=np.int64)
        self.r = np.zeros(capacity)
        self.s_next = np.zeros((capacity, OBS_DIM))
        self.terminal = np.zeros(capacity, dtype=bool)
        self.truncated = np.zeros(capacity, dtype=bool)
        self._next = 0
        self._size = 0

    def __len__(self):
        return self._size

    def push(self, tr):
        i = self._next
        self.s[i] = tr.s
        self.a[i] = tr.a
        self.r[i] = tr.r
        self.s_next[i] = tr.s_next
        self.terminal[i] = tr.terminal
        self.truncated[i] = tr.truncated
        self._next = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def sample(self, batch_size, rng):
        if self._size == 0:
            raise ValueError("cannot sample from an empty buffer")
        idx = rng.integers(0, self._size, size=batch_size)
        return TransitionBatch(
            s=self.s[idx],
            a=self.a[idx],
            r=self.r[idx],
            s_next=self.s_next[idx],
            terminal=self.terminal[idx],
            truncated=self.truncated[idx],
        )


class QAgent:
    """Action-value network with a periodically synchronized target copy."""

    def __init__(self, q_net, epsilon=0.1, gamma=1.0, batch_size=32, lr=0.001, target_sync=256):
        self.q_net = q_net
        self.target_net = q_net.copy()
        self.epsilon = epsilon
        self.gamma = gamma
        self.batch_size = batch_size
        self.lr = lr
        self.target_sync = target_sync
        self.opt = nn.RmsPropState.for_params(q_net.parameters())

    @classmethod
    def create(cls, hidden, rng, **kw):
        return cls(nn.Mlp.create([OBS_DIM, *hidden, N_ACTIONS], rng), **kw)

    def q_values(self, obs):
        out, _ = nn.forward(self.q_net, np.atleast_2d(obs))
        return out

    def target_values(self, obs):
        out, _ = nn.forward(self.target_net, np.atleast_2d(obs))
        return out

    def sync_target(self):
        self.target_net.load_from(self.q_net)


def epsilon_greedy(agent, s, rng):
    """Exploratory action: uniform with probability epsilon, else greedy.

    Ties break toward the lowest action index."""
    if rng.random() < agent.epsilon:
        return int(rng.integers(N_ACTIONS))
    return int(np.argmax(agent.q_values(s)[0]))


def dqn_target(batch, agent):
    """One-step TD targets from the target network; truncation bootstraps."""
    if len(batch) == 0:
        raise ValueError("empty batch")
    boot = agent.target_values(batch.s_next).max(axis=1)
    return np.where(batch.terminal, batch.r, batch.r + agent.gamma * boot)


def _q_regression_step(agent, s, a, targets, lr):
    """Regress q(s)[a] toward targets; gradient flows only through taken actions."""
    out, cache = nn.forward(agent.q_net, s)
    rows = np.arange(len(a))
    diff = out[rows, a] - targets
    loss = float(np.mean(diff * diff))
    d_out = np.zeros_like(out)
    d_out[rows, a] = (2.0 / len(a)) * diff
    grads = nn.backward(agent.q_net, cache, d_out)
    nn.rmsprop_step(agent.q_net.parameters(), grads, agent.opt, lr)
    return loss


def dqn_update(agent, batch, lr=None):
    """One RMSProp step on the squared one-step TD error; returns the loss."""
    if len(batch) == 0:
        raise ValueError("empty batch")
    targets = dqn_target(batch, agent)
    return _q_regression_step(agent, batch.s, batch.a, targets, agent.lr if lr is None else lr)


# --- model rollouts ---


@dataclass
class RolloutResult:
    """A simulated trajectory from (s0, a0): states s_1..s_k, the actions that
    produced them, per-step rewards and scalar variances.  k <= horizon; the
    rollout stops extending once a simulated terminal is detected."""

    s0: np.ndarray
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    scalar_vars: np.ndarray
    terminals: np.ndarray
    horizon: int

    def __len__(self):
        return len(self.rewards)

    @property
    def terminated(self):
        return bool(self.terminals.any())


@dataclass
class _BatchRollouts:
    s0: np.ndarray          # (B, 6) real root states
    states: np.ndarray      # (B, H, 6); column j holds s_{j+1}
    actions: np.ndarray     # (B, H); column j holds the action applied at s_j
    rewards: np.ndarray     # (B, H)
    scalar_vars: np.ndarray # (B, H)
    lengths: np.ndarray     # (B,) simulated steps actually taken
    terminated: np.ndarray  # (B,) rollout ended on a simulated/real terminal
    first_pred: np.ndarray  # (B, 6) the model's own mean prediction at (s0, a0)
    horizon: int


def _terminal_rows(obs):
    theta1 = np.arctan2(obs[:, 1], obs[:, 0])
    theta2 = np.arctan2(obs[:, 3], obs[:, 2])
    return (-np.cos(theta1) - np.cos(theta1 + theta2)) > 1.0


def _rollout_batch(model, agent, s0, a0, horizon, mixture=False, first=None):
    """Simulate `horizon` steps for a batch of root state-actions.

    `first`, when given, is the real transition (r, s_next, terminal) that
    replaces the simulated first step; the model's variance at (s0, a0) is
    kept either way.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    s0 = np.atleast_2d(s0)
    a0 = np.atleast_1d(a0)
    n = len(a0)
    states = np.zeros((n, horizon, OBS_DIM))
    actions = np.zeros((n, horizon), dtype=np.int64)
    rewards = np.zeros((n, horizon))
    svars = np.zeros((n, horizon))

    predict = model.predict_mixture if mixture else model.predict
    actions[:, 0] = a0
    mean0, _, svar0 = predict(encode_inputs(s0, a0))
    svars[:, 0] = svar0
    if first is not None:
        r1, s1, term1 = first
        states[:, 0] = s1
        rewards[:, 0] = r1
        terminal1 = np.asarray(term1, dtype=bool).copy()
    else:
        states[:, 0] = mean0
        rewards[:, 0] = -1.0
        terminal1 = _terminal_rows(mean0)

    lengths = np.ones(n, dtype=np.int64)
    terminated = terminal1.copy()
    alive = ~terminal1
    for j in range(1, horizon):
        if not alive.any():
            break
        prev = states[:, j - 1]
        acts = np.argmax(agent.q_values(prev), axis=1)
        actions[:, j] = acts
        mean, _, svar = predict(encode_inputs(prev, acts))
        states[:, j] = mean
        rewards[:, j] = -1.0
        svars[:, j] = svar
        term = _terminal_rows(mean)
        lengths[alive] += 1
        terminated |= alive & term
        alive &= ~term
    return _BatchRollouts(
        s0=s0,
        states=states,
        actions=actions,
        rewards=rewards,
        scalar_vars=svars,
        lengths=lengths,
        terminated=terminated,
        first_pred=mean0,
        horizon=horizon,
    )


def simulate_rollout(model, agent, s0, a0, horizon, mixture=False):
    """Simulate an H-step greedy trajectory from (s0, a0) under the model.

    Per-step scalar variances come from the model's own uncertainty estimate
    (zero for a deterministic model); pass mixture=True to draw them from a
    heteroscedastic ensemble's mixture variance instead."""
    roll = _rollout_batch(model, agent, s0, [a0], horizon, mixture=mixture)
    k = int(roll.lengths[0])
    return RolloutResult(
        s0=np.asarray(s0, dtype=np.float64),
        states=roll.states[0, :k],
        actions=roll.actions[0, :k],
        rewards=roll.rewards[0, :k],
        scalar_vars=roll.scalar_vars[0, :k],
        terminals=np.arange(1, k + 1) == (k if roll.terminated[0] else k + 1),
        horizon=horizon,
    )


def _h_step_targets_batch(roll, agent):
    """(B, H) matrix of h-step TD targets; frozen past a terminal step."""
    n, horizon = roll.rewards.shape
    gamma = agent.gamma
    flat = roll.states.reshape(n * horizon, OBS_DIM)
    boot = agent.target_values(flat).max(axis=1).reshape(n, horizon)
    targets = np.zeros((n, horizon))
    running = np.zeros(n)
    disc = 1.0
    for h in range(1, horizon + 1):
        active = roll.lengths >= h
        running = running + np.where(active, disc * roll.rewards[:, h - 1], 0.0)
        disc *= gamma
        use_boot = active & ~(roll.terminated & (roll.lengths == h))
        targets[:, h - 1] = running + np.where(use_boot, disc * boot[:, h - 1], 0.0)
    return targets


def h_step_targets(rollout, agent):
    """Vector U_1..U_H for a single rollout (see module docstring)."""
    k = len(rollout)
    gamma = agent.gamma
    targets = np.zeros(rollout.horizon)
    running = 0.0
    disc = 1.0
    for h in range(1, rollout.horizon + 1):
        if h <= k:
            running += disc * rollout.rewards[h - 1]
            disc *= gamma
            if h == k and rollout.terminated:
                targets[h - 1] = running
            else:
                boot = float(agent.target_values(rollout.states[h - 1]).max())
                targets[h - 1] = running + disc * boot
        else:
            targets[h - 1] = running
    return targets


def cumulative_variances(rollout):
    """Prefix sums of the per-step scalar variances.

    Accepts a RolloutResult or a bare variance vector."""
    svars = rollout.scalar_vars if isinstance(rollout, RolloutResult) else rollout
    return np.cumsum(np.asarray(svars, dtype=np.float64))


def selective_weights(cum_vars, tau):
    """Softmax of -cumulative-variance / tau, computed stably."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    z = -np.asarray(cum_vars, dtype=np.float64) / tau
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


def _weights_batch(roll, tau, uniform=False):
    n, horizon = roll.scalar_vars.shape
    if uniform:
        return np.full((n, horizon), 1.0 / horizon)
    steps = np.arange(1, horizon + 1)
    masked = np.where(steps[None, :] <= roll.lengths[:, None], roll.scalar_vars, 0.0)
    cum = np.cumsum(masked, axis=1)
    z = -cum / tau
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def weighted_target(targets, weights):
    """Dot product of targets and their (normalized) weights."""
    targets = np.asarray(targets, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if targets.shape != weights.shape:
        raise ValueError("targets and weights must have equal length")
    if abs(weights.sum() - 1.0) > 1e-9:
        raise ValueError("weights must sum to 1")
    return float(targets @ weights)


def expected_rollout_length(weights):
    """Effective planning horizon: sum_h h * w_h."""
    weights = np.asarray(weights, dtype=np.float64)
    return float(np.arange(1, len(weights) + 1) @ weights)


def oracle_variances(rollout, oracle):
    """True one-step squared errors along a simulated trajectory.

    `oracle(obs, action)` must return the real-dynamics successor observation.
    """
    prev = rollout.s0
    out = np.zeros(len(rollout))
    for j in range(len(rollout)):
        truth = oracle(prev, int(rollout.actions[j]))
        diff = rollout.states[j] - truth
        out[j] = float(diff @ diff)
        prev = rollout.states[j]
    return out


def _oracle_variances_batch(roll, oracle, first_real=None):
    """Per-row oracle errors; with a real first step, step 1 scores the
    model's own prediction against the real successor."""
    n, horizon = roll.rewards.shape
    svars = np.zeros((n, horizon))
    for i in range(n):
        prev = roll.s0[i]
        for j in range(int(roll.lengths[i])):
            if j == 0 and first_real is not None:
                diff = roll.first_pred[i] - first_real[i]
            else:
                truth = oracle(prev, int(roll.actions[i, j]))
                diff = roll.states[i, j] - truth
            svars[i, j] = diff @ diff
            prev = roll.states[i, j]
    return svars


def mve_update(agent, model, batch, horizon, tau=0.1, mode="uniform", oracle=None, lr=None):
    """Value update toward the weighted average of h-step targets.

    The simulated first step is replaced by the real transition from the
    batch.  Returns the regression loss; see `mve_update_stats` for the
    expected rollout length of the same update.
    """
    loss, _ = mve_update_stats(agent, model, batch, horizon, tau, mode, oracle, lr)
    return loss


def selective_mve_update(agent, model, batch, horizon, tau, mode, oracle=None, lr=None):
    """`mve_update` restricted to the uncertainty-weighted modes."""
    if mode == "uniform":
        raise ValueError("selective update needs a non-uniform weighting mode")
    loss, _ = mve_update_stats(agent, model, batch, horizon, tau, mode, oracle, lr)
    return loss


def mve_update_stats(agent, model, batch, horizon, tau=0.1, mode="uniform", oracle=None, lr=None):
    """As `mve_update`, returning (loss, batch-mean expected rollout length)."""
    if mode not in WEIGHT_MODES:
        raise ValueError(f"unknown weighting mode {mode!r}")
    if len(batch) == 0:
        raise ValueError("empty batch")
    if mode == "oracle" and oracle is None:
        raise ValueError("oracle mode needs an oracle")
    roll = _rollout_batch(
        model,
        agent,
        batch.s,
        batch.a,
        horizon,
        mixture=(mode == "combined"),
        first=(batch.r, batch.s_next, batch.terminal),
    )
    if mode == "oracle":
        roll.scalar_vars = _oracle_variances_batch(roll, oracle, first_real=batch.s_next)
    weights = _weights_batch(roll, tau, uniform=(mode == "uniform"))
    targets = _h_step_targets_batch(roll, agent)
    u_avg = (targets * weights).sum(axis=1)
    loss = _q_regression_step(agent, batch.s, batch.a, u_avg, agent.lr if lr is None else lr)
    steps = np.arange(1, horizon + 1)
    return loss, float((weights @ steps).mean())


def _pearson(x, y):
    """(correlation, degenerate) with r = 0 when either side is constant."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if np.all(x == x[0]) or np.all(y == y[0]):
        return 0.0, True
    xc = x - x.mean()
    yc = y - y.mean()
    denom = np.sqrt((xc @ xc) * (yc @ yc))
    if denom == 0.0:
        return 0.0, True
    return float((xc @ yc) / denom), False


@dataclass
class CorrelationResult:
    r_learned: float
    r_ensemble: float
    r_combined: float
    degenerate: bool


def variance_error_correlation(ensemble, buffer, batch_size, rng):
    """Pearson correlation of each variance estimate with the true squared error.

    Samples a fresh uniform batch; the true error is measured between the
    ensemble-mean prediction and the observed next state.
    """
    if len(buffer) < batch_size:
        raise ValueError("buffer smaller than the requested batch")
    batch = buffer.sample(batch_size, rng)
    x = encode_inputs(batch.s, batch.a)
    means = ensemble.member_means(x)
    member_vars = []
    for member in ensemble.members:
        pre, _ = nn.forward(member.var_net, x)
        member_vars.append(nn.softplus_floor(pre))
    variances = np.stack(member_vars)
    mean = means.mean(axis=0)
    err = ((mean - batch.s_next) ** 2).sum(axis=1)
    v_learned = variances.mean(axis=0).sum(axis=1)
    v_ensemble = means.var(axis=0).sum(axis=1)
    v_combined = v_learned + v_ensemble
    r_l, d1 = _pearson(v_learned, err)
    r_e, d2 = _pearson(v_ensemble, err)
    r_c, d3 = _pearson(v_combined, err)
    return CorrelationResult(r_l, r_e, r_c, d1 or d2 or d3)
