"""Selective model-based value expansion under limited model capacity.

Subpackages/modules:
  backend      compiled + reference numerical kernels
  nn           dense-network core (MLP, losses, optimizers)
  envs         Acrobot dynamics and the 1-D regression benchmark
  uncertainty  dynamics models and predictive-uncertainty estimators
  planning     DQN / MVE / selective MVE and their metrics
  harness      experiment configs, runners, sweeps, CSV logging
"""

from . import backend

__version__ = "0.1.0"
__all__ = ["backend", "__version__"]
