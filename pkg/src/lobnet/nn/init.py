"""Seeded parameter initialisation.

Uniform fan-scaled (Glorot-style) weights everywhere; biases zero except the
LSTM forget gate, which starts at 1 so memory persists early in training.
"""

from __future__ import annotations

import numpy as np

from .tensor import DEFAULT_DTYPE


def glorot_uniform(shape, fan_in: int, fan_out: int, rng: np.random.Generator, dtype=DEFAULT_DTYPE) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


def conv_weight(out_channels: int, in_channels: int, kt: int, kf: int, rng, dtype=DEFAULT_DTYPE) -> np.ndarray:
    fan_in = in_channels * kt * kf
    fan_out = out_channels * kt * kf
    return glorot_uniform((out_channels, in_channels, kt, kf), fan_in, fan_out, rng, dtype)


def dense_weight(n_in: int, n_out: int, rng, dtype=DEFAULT_DTYPE) -> np.ndarray:
    return glorot_uniform((n_in, n_out), n_in, n_out, rng, dtype)


def zeros(shape, dtype=DEFAULT_DTYPE) -> np.ndarray:
    return np.zeros(shape, dtype=dtype)
