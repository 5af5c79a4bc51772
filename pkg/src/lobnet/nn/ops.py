"""Forward and reverse passes for the convolutional layers.

The public tensors are (N, C, T, F): batch, channels, time, feature column.
Convolution is cross-correlation (no kernel flip), the usual network
convention; each kernel acts as a learned FIR smoothing filter along its
axes. "Same in time" zero padding keeps the time length unchanged; for even
kernel heights the extra zero row goes at the sequence start so the padding
never leans on future rows. Feature-axis reductions are exact (no feature
padding).

Internally compute runs channels-first, (C, N, T, F): the patch matrix
(im2col) then assembles from pure block copies and every pass is a single
GEMM, which is what keeps CPU training of the full model tractable. The
patch matrix built by the forward pass can be handed straight back to the
backward pass. Every backward was derived by hand and is pinned against
central finite differences in the test suite.
"""

from __future__ import annotations

import numpy as np

from ..errors import ValidationError
from .tensor import check_finite


def same_time_padding(kt: int) -> tuple[int, int]:
    """Zero rows (before, after) keeping time length fixed at stride 1."""
    return kt // 2, (kt - 1) // 2


def _pad(x: np.ndarray, pad_t: tuple[int, int], pad_f: tuple[int, int]) -> np.ndarray:
    if pad_t == (0, 0) and pad_f == (0, 0):
        return x
    return np.pad(x, ((0, 0), (0, 0), pad_t, pad_f))


def _out_extent(xp: np.ndarray, kt: int, kf: int, st: int, sf: int) -> tuple[int, int]:
    if xp.shape[2] < kt or xp.shape[3] < kf:
        raise ValidationError(
            f"padded input {xp.shape[2:]} smaller than kernel ({kt}, {kf})"
        )
    return (xp.shape[2] - kt) // st + 1, (xp.shape[3] - kf) // sf + 1


def _im2col(xp: np.ndarray, kt: int, kf: int, st: int, sf: int, ot: int, of: int) -> np.ndarray:
    """Patch matrix (C*KT*KF, N*OT*OF) from channels-first padded input."""
    c, n = xp.shape[0], xp.shape[1]
    cols = np.empty((c, kt, kf, n, ot, of), dtype=xp.dtype)
    for i in range(kt):
        for j in range(kf):
            np.copyto(cols[:, i, j], xp[:, :, i : i + st * ot : st, j : j + sf * of : sf])
    return cols.reshape(c * kt * kf, n * ot * of)


def conv_core_forward(
    x_cnf: np.ndarray,
    w: np.ndarray,
    b: np.ndarray,
    stride: tuple[int, int] = (1, 1),
    pad_t: tuple[int, int] = (0, 0),
    pad_f: tuple[int, int] = (0, 0),
) -> tuple[np.ndarray, np.ndarray]:
    """Channels-first convolution: (C, N, T, F) -> (O, N, OT, OF).

    Returns the output and the patch matrix for reuse by the backward pass.
    """
    if w.shape[1] != x_cnf.shape[0]:
        raise ValidationError(
            f"weight expects {w.shape[1]} input channels, input has {x_cnf.shape[0]}"
        )
    o, c, kt, kf = w.shape
    st, sf = stride
    xp = _pad(x_cnf, pad_t, pad_f)
    ot, of = _out_extent(xp, kt, kf, st, sf)
    n = x_cnf.shape[1]
    cols = _im2col(xp, kt, kf, st, sf, ot, of)
    out = w.reshape(o, c * kt * kf) @ cols
    out += b[:, None]
    return out.reshape(o, n, ot, of), cols


def conv_core_backward(
    cols: np.ndarray,
    w: np.ndarray,
    grad_out: np.ndarray,
    x_shape: tuple[int, ...],
    stride: tuple[int, int] = (1, 1),
    pad_t: tuple[int, int] = (0, 0),
    pad_f: tuple[int, int] = (0, 0),
    need_dx: bool = True,
) -> tuple[np.ndarray | None, np.ndarray, np.ndarray]:
    """Gradients for the channels-first convolution; grad_out is (O, N, OT, OF)."""
    o, c, kt, kf = w.shape
    st, sf = stride
    _, n, ot, of = grad_out.shape
    g2d = grad_out.reshape(o, n * ot * of)
    dw = (g2d @ cols.T).reshape(w.shape)
    db = g2d.sum(axis=1)
    if not need_dx:
        return None, dw, db
    dcols = (w.reshape(o, c * kt * kf).T @ g2d).reshape(c, kt, kf, n, ot, of)
    padded_shape = (c, n, x_shape[2] + sum(pad_t), x_shape[3] + sum(pad_f))
    dxp = np.zeros(padded_shape, dtype=grad_out.dtype)
    for i in range(kt):
        for j in range(kf):
            dxp[:, :, i : i + st * ot : st, j : j + sf * of : sf] += dcols[:, i, j]
    t0, f0 = pad_t[0], pad_f[0]
    dx = dxp[:, :, t0 : t0 + x_shape[2], f0 : f0 + x_shape[3]]
    return np.ascontiguousarray(dx), dw, db


def conv2d_forward(
    x: np.ndarray,
    w: np.ndarray,
    b: np.ndarray,
    stride: tuple[int, int] = (1, 1),
    pad_t: tuple[int, int] = (0, 0),
    pad_f: tuple[int, int] = (0, 0),
) -> np.ndarray:
    """Strided cross-correlation with zero padding.

    x: (N, C, T, F), w: (O, C, KT, KF), b: (O,) -> (N, O, OT, OF).
    """
    out_cnf, _ = conv_core_forward(x.transpose(1, 0, 2, 3), w, b, stride, pad_t, pad_f)
    out = np.ascontiguousarray(out_cnf.transpose(1, 0, 2, 3))
    check_finite("conv2d_forward", out)
    return out


def conv2d_backward(
    x: np.ndarray,
    w: np.ndarray,
    grad_out: np.ndarray,
    stride: tuple[int, int] = (1, 1),
    pad_t: tuple[int, int] = (0, 0),
    pad_f: tuple[int, int] = (0, 0),
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients w.r.t. input, weight and bias of :func:`conv2d_forward`."""
    o, c, kt, kf = w.shape
    st, sf = stride
    x_cnf = x.transpose(1, 0, 2, 3)
    xp = _pad(x_cnf, pad_t, pad_f)
    ot, of = _out_extent(xp, kt, kf, st, sf)
    cols = _im2col(xp, kt, kf, st, sf, ot, of)
    dx_cnf, dw, db = conv_core_backward(
        cols, w, np.ascontiguousarray(grad_out.transpose(1, 0, 2, 3)),
        x_cnf.shape, stride, pad_t, pad_f,
    )
    return np.ascontiguousarray(dx_cnf.transpose(1, 0, 2, 3)), dw, db


def leaky_relu(x: np.ndarray, slope: float = 0.01) -> np.ndarray:
    """x where positive, slope*x elsewhere (slope applies at exactly 0).

    Computed as max(x, slope*x), valid for any slope in [0, 1].
    """
    out = x * x.dtype.type(slope)
    np.maximum(x, out, out=out)
    return out


def _leaky_scale(ref: np.ndarray, slope: float) -> np.ndarray:
    """Derivative factor: 1 where ref > 0, slope elsewhere (slope at 0)."""
    scale = (ref > 0).astype(ref.dtype)
    scale *= ref.dtype.type(1.0 - slope)
    scale += ref.dtype.type(slope)
    return scale


def leaky_relu_backward(grad_out: np.ndarray, x: np.ndarray, slope: float = 0.01) -> np.ndarray:
    return grad_out * _leaky_scale(x, slope)


def leaky_relu_backward_(grad_out: np.ndarray, ref: np.ndarray, slope: float = 0.01) -> np.ndarray:
    """In-place gradient scale.

    ``ref`` may be the pre-activation or the activated output: leaky
    activation preserves sign for slope > 0, so both give the same mask.
    """
    grad_out *= _leaky_scale(ref, slope)
    return grad_out


def maxpool_time_forward(x: np.ndarray, window: int = 3) -> tuple[np.ndarray, np.ndarray]:
    """Max over a time window per channel, stride 1, zero padded.

    Works on any (A, B, T, F) layout with time on axis 2. Padding contributes
    literal zeros, so at borders a zero can win over all-negative inputs.
    Returns (output, argmax window offsets); output time length equals the
    input's.
    """
    pad = same_time_padding(window)
    xp = np.pad(x, ((0, 0), (0, 0), pad, (0, 0)))
    t = x.shape[2]
    stacked = np.stack([xp[:, :, i : i + t, :] for i in range(window)], axis=-1)
    arg = stacked.argmax(axis=-1)  # first occurrence = earliest time on ties
    out = np.take_along_axis(stacked, arg[..., None], axis=-1)[..., 0]
    return out, arg


def maxpool_time_backward(grad_out: np.ndarray, arg: np.ndarray, window: int = 3) -> np.ndarray:
    """Route gradient to the argmax positions; gradient into padding is dropped."""
    pad = same_time_padding(window)
    a, b, t, f = grad_out.shape
    dxp = np.zeros((a, b, t + pad[0] + pad[1], f), dtype=grad_out.dtype)
    for i in range(window):
        dxp[:, :, i : i + t, :] += grad_out * (arg == i)
    return np.ascontiguousarray(dxp[:, :, pad[0] : pad[0] + t, :])


def linear_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    return x @ w + b


def linear_backward(
    x: np.ndarray, w: np.ndarray, grad_out: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    return grad_out @ w.T, x.T @ grad_out, grad_out.sum(axis=0)
