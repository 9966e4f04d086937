"""Poisson spike encoding, teaching signals, rate loss and output decoding."""

import numpy as np

from .errors import ShapeError


def poisson_encode(pixels, T, rate_scale, stream):
    """Encode normalized pixel intensities as a binary spike raster.

    Each (neuron, step) entry is an independent Bernoulli draw with
    probability pixel * rate_scale: a 1 ms-resolution approximation of a
    Poisson process whose rate is proportional to intensity. Returns a
    bool array of shape (len(pixels), T).
    """
    pixels = np.asarray(pixels, dtype=float)
    if pixels.ndim != 1:
        raise ShapeError(f"pixels must be a vector, got shape {pixels.shape}")
    if pixels.size and (pixels.min() < 0.0 or pixels.max() > 1.0):
        raise ValueError("pixel intensities must lie in [0, 1]")
    if not (0.0 < rate_scale <= 1.0):
        raise ValueError(f"rate_scale must be in (0, 1], got {rate_scale}")
    p = pixels * rate_scale
    return stream.random((pixels.size, T)) < p[:, None]


def teaching_signal(label, n_out):
    """One-hot rate target: 1 for the labeled class, 0 elsewhere."""
    if not (0 <= label < n_out):
        raise ValueError(f"label {label} out of range for {n_out} output neurons")
    r = np.zeros(n_out)
    r[label] = 1.0
    return r


def loss(r, s_hat_out, beta):
    """Weighted squared rate error: beta * sum_i (r_i - s_hat_i)^2."""
    r = np.asarray(r, dtype=float)
    s_hat_out = np.asarray(s_hat_out, dtype=float)
    if r.shape != s_hat_out.shape:
        raise ShapeError(f"teaching signal shape {r.shape} != output rates shape {s_hat_out.shape}")
    d = r - s_hat_out
    return float(beta * np.dot(d, d))


def classify(output_raster):
    """Predicted class: output neuron with the most spikes over the window.

    Ties break toward the lowest index, so an all-silent raster decodes
    as class 0.
    """
    output_raster = np.asarray(output_raster)
    if output_raster.size == 0:
        raise ValueError("cannot classify an empty raster")
    counts = output_raster.sum(axis=1)
    return int(np.argmax(counts))
