"""Fractional-order spike-timing-dependent gradient descent (FO-STDGD).

Library and CLI for training multi-layer spiking networks of nonleaky
integrate-and-fire neurons with fractional-order gradients, plus the
standalone scalar fractional optimizer, MNIST ingestion, experiment
sweeps, and a computational-cost metric.
"""

__version__ = "0.1.0"

from .fracgrad import FractionalStepParams, Trajectory, caputo_quadratic, fractional_step, gamma_fn, minimize_convex
from .network import NetworkConfig, SynapseStore, backward_window, forward_sample, init_network, train

__all__ = [
    "FractionalStepParams",
    "Trajectory",
    "caputo_quadratic",
    "fractional_step",
    "gamma_fn",
    "minimize_convex",
    "NetworkConfig",
    "SynapseStore",
    "backward_window",
    "forward_sample",
    "init_network",
    "train",
    "__version__",
]
