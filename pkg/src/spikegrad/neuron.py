"""Discrete-time nonleaky integrate-and-fire dynamics and windowed averages.

A neuron accumulates weighted input into its membrane potential without
leak, fires when the potential reaches the threshold theta, and resets to
the resting potential 0. Spikes and pre-reset firing potentials are
averaged over a trailing window of tau steps to obtain the
quasi-instantaneous firing rate s_hat and the temporal average membrane
potential u_hat; the two are linked by a ReLU-like piecewise-linear
activation with gain 1/theta.
"""

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class NeuronParams:
    """Threshold voltage, averaging window and (fixed) resting potential."""

    theta: float = 15.0
    tau: int = 50
    u_rest: float = 0.0

    def __post_init__(self):
        if not (self.theta > 0.0):
            raise ValueError(f"theta must be > 0, got {self.theta}")
        if not (isinstance(self.tau, int) and self.tau > 1):
            raise ValueError(f"tau must be an integer > 1, got {self.tau!r}")
        if self.u_rest != 0.0:
            raise ValueError("u_rest is fixed at 0")


@dataclass(frozen=True)
class WindowStats:
    """Firing rate and mean pre-reset potential over one tau-step window."""

    s_hat: float
    u_hat: float


def integrate_step(u, weighted_input, params):
    """Advance one neuron by one time step.

    The candidate potential is clamped at the resting level 0 before the
    threshold test (negative weights must not drive u below rest), and the
    neuron fires exactly when the candidate reaches theta, resetting to 0.
    Returns (u_next, spiked); when spiked, the pre-reset fire potential is
    the clamped candidate max(0, u + weighted_input).
    """
    if not math.isfinite(weighted_input):
        raise ValueError(f"non-finite weighted input: {weighted_input!r}")
    candidate = u + weighted_input
    if candidate < 0.0:
        candidate = 0.0
    if candidate >= params.theta:
        return 0.0, True
    return candidate, False


class LayerState:
    """Membrane potentials plus rolling spike / fire-potential history.

    Owns the per-neuron state of one layer: the membrane vector and ring
    buffers holding the last tau steps of spikes and pre-reset firing
    potentials. Single-owner mutable; distinct instances may be used from
    different threads.
    """

    def __init__(self, n, params):
        self.params = params
        self.u = np.zeros(n)
        self.spike_ring = np.zeros((params.tau, n), dtype=bool)
        self.fire_ring = np.zeros((params.tau, n))
        self.steps = 0

    @property
    def n(self):
        return self.u.shape[0]

    def step(self, weighted_inputs):
        """Advance every neuron one step; returns the bool spike vector."""
        candidate = np.maximum(0.0, self.u + weighted_inputs)
        spiked = candidate >= self.params.theta
        slot = self.steps % self.params.tau
        self.spike_ring[slot] = spiked
        self.fire_ring[slot] = np.where(spiked, candidate, 0.0)
        self.u = np.where(spiked, 0.0, candidate)
        self.steps += 1
        return spiked

    def window_counts(self):
        """(spike counts, summed fire potentials) over the last tau steps."""
        if self.steps < self.params.tau:
            raise RuntimeError(
                f"window statistics need {self.params.tau} simulated steps, have {self.steps}"
            )
        return self.spike_ring.sum(axis=0), self.fire_ring.sum(axis=0)

    def reset(self):
        self.u[:] = 0.0
        self.spike_ring[:] = False
        self.fire_ring[:] = 0.0
        self.steps = 0


def window_stats(state, neuron_index, params):
    """WindowStats of one neuron over the trailing tau-step window."""
    counts, fire_sums = state.window_counts()
    tau = params.tau
    return WindowStats(s_hat=counts[neuron_index] / tau, u_hat=fire_sums[neuron_index] / tau)


def activation(u_hat, b, params):
    """Piecewise-linear activation linking u_hat to the firing rate.

    Returns (u_hat - b) / theta on the active branch u_hat >= theta / tau
    and 0 otherwise. The offset b exists (0 <= b < theta) for any nonleaky
    IF neuron whose per-step input is bounded by theta; it is a free
    parameter here because only the gain and the active-branch indicator
    enter the training rule.
    """
    if not (0.0 <= b < params.theta):
        raise ValueError(f"offset b must lie in [0, theta), got {b}")
    if u_hat >= params.theta / params.tau:
        return (u_hat - b) / params.theta
    return 0.0
