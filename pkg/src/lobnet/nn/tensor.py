"""Tensor conventions for the hand-rolled network kernel.

The kernel's tensor is a plain numpy ndarray: shape metadata plus a
row-major buffer, which is exactly what the layer math needs. Training runs
in float32; gradient checking casts everything to float64 because central
differences are meaningless at single precision.

Debug mode adds a finite-value fault on tensors passing through
``check_finite`` (off by default; it costs a full scan per call).
"""

from __future__ import annotations

import numpy as np

from ..errors import ValidationError

DEFAULT_DTYPE = np.float32
GRAD_CHECK_DTYPE = np.float64

_debug_checks = False


def set_debug_checks(enabled: bool) -> None:
    global _debug_checks
    _debug_checks = bool(enabled)


def debug_checks_enabled() -> bool:
    return _debug_checks


def check_finite(name: str, *arrays: np.ndarray) -> None:
    if not _debug_checks:
        return
    for arr in arrays:
        if not np.all(np.isfinite(arr)):
            raise ValidationError(f"non-finite values in tensor {name!r}")


def as_tensor(data, dtype=DEFAULT_DTYPE) -> np.ndarray:
    arr = np.asarray(data, dtype=dtype)
    check_finite("as_tensor", arr)
    return arr


def cast_params(params: dict[str, np.ndarray], dtype) -> dict[str, np.ndarray]:
    """New parameter dict with every tensor cast to ``dtype``."""
    return {name: np.asarray(t, dtype=dtype) for name, t in params.items()}
