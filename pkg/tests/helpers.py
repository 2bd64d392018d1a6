"""Shared test-construction utilities: constant-output networks and models."""

import math

import numpy as np

from mvekit import nn
from mvekit.envs import N_ACTIONS, OBS_DIM
from mvekit.uncertainty import EnsembleModel, HeteroModel


def softplus_inv(y):
    """z with softplus(z) = y, i.e. log(exp(y) - 1)."""
    return math.log(math.expm1(y))


def constant_mlp(out, in_dim):
    """Single-layer net with zero weights: every input maps to `out`."""
    out = np.asarray(out, dtype=np.float64)
    return nn.Mlp([in_dim, out.size], [np.zeros((in_dim, out.size))], [out.copy()])


def constant_hetero_model(mu, var, in_dim=OBS_DIM + N_ACTIONS):
    """Heteroscedastic model that predicts (mu, var) for every input."""
    mu = np.asarray(mu, dtype=np.float64)
    var = np.asarray(var, dtype=np.float64)
    pre = np.array([softplus_inv(v - nn.VAR_FLOOR) for v in var])
    return HeteroModel(constant_mlp(mu, in_dim), constant_mlp(pre, in_dim))


def constant_hetero_ensemble(mus, variances, in_dim=OBS_DIM + N_ACTIONS):
    """Ensemble of constant heteroscedastic members (one per row of mus)."""
    members = [
        constant_hetero_model(m, v, in_dim=in_dim) for m, v in zip(mus, variances)
    ]
    return EnsembleModel(members)
