"""Data-generating processes: the Acrobot swing-up task and a 1-D regression benchmark.

Acrobot follows the classic two-link formulation (unit masses and lengths,
torque on the second joint, gravity 9.8), integrated with explicit Euler at
0.05 s, four substeps per 0.2 s action.  Observations are the bounded
trig encoding (cos/sin of both angles plus both velocities).
"""

import math
from dataclasses import dataclass

import numpy as np

N_ACTIONS = 3
OBS_DIM = 6
TORQUES = (-1.0, 0.0, 1.0)

MAX_VEL_1 = 4.0 * math.pi
MAX_VEL_2 = 9.0 * math.pi

_DT = 0.05
_SUBSTEPS = 4
_GRAVITY = 9.8
# unit link masses/lengths, centers of mass at 0.5, unit inertias
_M1 = _M2 = 1.0
_L1 = 1.0
_LC1 = _LC2 = 0.5
_I1 = _I2 = 1.0

REWARD_PER_STEP = -1.0


@dataclass
class AcrobotState:
    """Joint angles (radians, 0 = hanging down) and angular velocities."""

    theta1: float
    theta2: float
    dtheta1: float
    dtheta2: float


def _wrap_pi(x):
    """Wrap an angle to [-pi, pi)."""
    return (x + math.pi) % (2.0 * math.pi) - math.pi


def acrobot_reset(rng):
    """All four state components uniform on [-0.1, 0.1]."""
    vals = rng.uniform(-0.1, 0.1, size=4)
    return AcrobotState(*vals)


def _accelerations(theta1, theta2, dtheta1, dtheta2, torque):
    cos2 = math.cos(theta2)
    sin2 = math.sin(theta2)
    d1 = (
        _M1 * _LC1**2
        + _M2 * (_L1**2 + _LC2**2 + 2.0 * _L1 * _LC2 * cos2)
        + _I1
        + _I2
    )
    d2 = _M2 * (_LC2**2 + _L1 * _LC2 * cos2) + _I2
    # gravity torques: cos(theta - pi/2) written as sin(theta) so the
    # hanging-down rest state is an exact fixed point
    phi2 = _M2 * _LC2 * _GRAVITY * math.sin(theta1 + theta2)
    phi1 = (
        -_M2 * _L1 * _LC2 * dtheta2**2 * sin2
        - 2.0 * _M2 * _L1 * _LC2 * dtheta2 * dtheta1 * sin2
        + (_M1 * _LC1 + _M2 * _L1) * _GRAVITY * math.sin(theta1)
        + phi2
    )
    dd2 = (
        torque + (d2 / d1) * phi1 - _M2 * _L1 * _LC2 * dtheta1**2 * sin2 - phi2
    ) / (_M2 * _LC2**2 + _I2 - d2**2 / d1)
    dd1 = -(d2 * dd2 + phi1) / d1
    return dd1, dd2


def is_terminal(s):
    """Tip raised above one link length: -cos(t1) - cos(t1 + t2) > 1."""
    return -math.cos(s.theta1) - math.cos(s.theta1 + s.theta2) > 1.0


def acrobot_step(s, action):
    """Apply one action for 0.2 s; returns (next state, reward, terminal)."""
    if action not in (0, 1, 2):
        raise ValueError(f"action must be 0, 1 or 2, got {action}")
    torque = TORQUES[action]
    t1, t2, v1, v2 = s.theta1, s.theta2, s.dtheta1, s.dtheta2
    for _ in range(_SUBSTEPS):
        dd1, dd2 = _accelerations(t1, t2, v1, v2, torque)
        t1 = _wrap_pi(t1 + _DT * v1)
        t2 = _wrap_pi(t2 + _DT * v2)
        v1 = min(max(v1 + _DT * dd1, -MAX_VEL_1), MAX_VEL_1)
        v2 = min(max(v2 + _DT * dd2, -MAX_VEL_2), MAX_VEL_2)
    cur = AcrobotState(t1, t2, v1, v2)
    return cur, REWARD_PER_STEP, is_terminal(cur)


def observe(s):
    """Trig-encoded 6-vector (cos t1, sin t1, cos t2, sin t2, dt1, dt2)."""
    return np.array(
        [
            math.cos(s.theta1),
            math.sin(s.theta1),
            math.cos(s.theta2),
            math.sin(s.theta2),
            s.dtheta1,
            s.dtheta2,
        ]
    )


def state_from_observation(obs):
    """Invert `observe` via atan2; velocities are clipped into their bounds.

    Model-predicted observations need not have normalized trig pairs or
    in-range velocities, so this is the projection back onto the state space.
    """
    return AcrobotState(
        theta1=math.atan2(obs[1], obs[0]),
        theta2=math.atan2(obs[3], obs[2]),
        dtheta1=min(max(float(obs[4]), -MAX_VEL_1), MAX_VEL_1),
        dtheta2=min(max(float(obs[5]), -MAX_VEL_2), MAX_VEL_2),
    )


def terminal_from_observation(obs):
    """Terminal predicate on a (possibly model-predicted) observation."""
    return is_terminal(state_from_observation(obs))


def true_successor(obs, action):
    """One step of the real dynamics from an observation; the planning oracle."""
    nxt, _, _ = acrobot_step(state_from_observation(obs), action)
    return observe(nxt)


def true_reward(s, a, s_next):
    """The known Acrobot reward: -1 on every transition, terminal included."""
    return REWARD_PER_STEP


class AcrobotEnv:
    """Stateful wrapper used by the experiment loop."""

    def __init__(self):
        self.state = None

    def reset(self, rng):
        self.state = acrobot_reset(rng)
        return observe(self.state)

    def step(self, action):
        self.state, reward, terminal = acrobot_step(self.state, action)
        return observe(self.state), reward, terminal


# --- 1-D regression benchmark ---

ALPHA = 4.0
BETA = 13.0


@dataclass
class RegressionSample:
    x: float
    y: float


def regression_target(x):
    """x + sin(4 x) + sin(13 x); the benchmark is noiseless."""
    return x + math.sin(ALPHA * x) + math.sin(BETA * x)


def make_regression_dataset(n, lo, hi, rng):
    """n samples with x ~ Uniform(lo, hi) and exact targets."""
    if n < 1:
        raise ValueError(f"need at least one sample, got n={n}")
    if not lo < hi:
        raise ValueError(f"invalid interval ({lo}, {hi})")
    xs = rng.uniform(lo, hi, size=n)
    return [RegressionSample(float(x), regression_target(float(x))) for x in xs]


def dataset_arrays(samples):
    """Column-matrix views of a sample list, for batched training."""
    x = np.array([[s.x] for s in samples])
    y = np.array([[s.y] for s in samples])
    return x, y
