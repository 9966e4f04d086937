"""Checkpoint serialization: one JSON document with base64 weight payloads."""

import base64
import binascii
import json

import numpy as np

from .errors import DataFormatError
from .network import NetworkConfig, SynapseStore

FORMAT_VERSION = 1


def _encode_matrix(w):
    return base64.b64encode(np.ascontiguousarray(w, dtype="<f8").tobytes()).decode("ascii")


def _decode_matrix(payload, shape, name):
    try:
        raw = base64.b64decode(payload.encode("ascii"), validate=True)
    except (binascii.Error, UnicodeEncodeError, AttributeError) as exc:
        raise DataFormatError(f"checkpoint field {name}: corrupted base64 payload ({exc})") from None
    expected = shape[0] * shape[1] * 8
    if len(raw) != expected:
        raise DataFormatError(
            f"checkpoint field {name}: payload is {len(raw)} bytes, shape {shape} needs {expected}"
        )
    return np.frombuffer(raw, dtype="<f8").astype(float).reshape(shape)


def checkpoint_dict(store, config, iteration_count):
    sizes = config.layer_sizes
    return {
        "format_version": FORMAT_VERSION,
        "layer_sizes": list(sizes),
        "theta": config.theta,
        "tau": config.tau,
        "T": config.T,
        "alpha": config.alpha,
        "mu": config.mu,
        "beta": config.beta,
        "epsilon": config.epsilon,
        "batch_size": config.batch_size,
        "rate_scale": config.rate_scale,
        "weight_init_stddev": config.weight_init_stddev,
        "iteration_count": int(iteration_count),
        "rng_state_seed": int(config.seed),
        "w_current": [_encode_matrix(w) for w in store.w_current],
        "w_previous": [_encode_matrix(w) for w in store.w_previous],
    }


def save_checkpoint(path, store, config, iteration_count):
    doc = checkpoint_dict(store, config, iteration_count)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(doc, f, sort_keys=True, separators=(",", ":"))
        f.write("\n")


def load_checkpoint(path):
    """Load a checkpoint; returns (store, config, iteration_count).

    Rejects unknown format versions, mismatched shapes and corrupt payloads.
    """
    with open(path, "r", encoding="utf-8") as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"{path}: not valid JSON ({exc})") from None
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise DataFormatError(f"{path}: unknown format_version {version!r}")
    required = {"layer_sizes", "w_current", "w_previous", "iteration_count", "rng_state_seed"}
    missing = required - doc.keys()
    if missing:
        raise DataFormatError(f"{path}: missing checkpoint fields {sorted(missing)}")
    sizes = tuple(int(n) for n in doc["layer_sizes"])
    config = NetworkConfig(
        layer_sizes=sizes,
        theta=doc["theta"],
        tau=int(doc["tau"]),
        T=int(doc["T"]),
        alpha=doc["alpha"],
        mu=doc["mu"],
        beta=doc["beta"],
        epsilon=doc["epsilon"],
        batch_size=int(doc["batch_size"]),
        seed=int(doc["rng_state_seed"]),
        rate_scale=doc["rate_scale"],
        weight_init_stddev=doc["weight_init_stddev"],
    )
    shapes = [(sizes[i + 1], sizes[i]) for i in range(len(sizes) - 1)]
    for key in ("w_current", "w_previous"):
        if len(doc[key]) != len(shapes):
            raise DataFormatError(
                f"{path}: {key} holds {len(doc[key])} matrices, layer_sizes implies {len(shapes)}"
            )
    w_current = [
        _decode_matrix(p, s, f"w_current[{i}]") for i, (p, s) in enumerate(zip(doc["w_current"], shapes))
    ]
    w_previous = [
        _decode_matrix(p, s, f"w_previous[{i}]")
        for i, (p, s) in enumerate(zip(doc["w_previous"], shapes))
    ]
    store = SynapseStore(w_current)
    for li, w in enumerate(w_previous):
        store.w_previous[li] = w
    return store, config, int(doc["iteration_count"])
