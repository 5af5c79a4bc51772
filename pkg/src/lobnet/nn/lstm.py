"""A single LSTM layer with hand-rolled backpropagation through time.

Standard cell, no peepholes: sigmoid input/forget/output gates, tanh for the
candidate and the cell squash, hidden and cell state both start at zero.
Parameters live as twelve named tensors, one (input weight, recurrent
weight, bias) triple per gate; compute stacks them into (D, 4H) / (H, 4H)
blocks ordered (input, forget, output, candidate) so each step is one GEMM,
one sigmoid over the three gate blocks and one tanh over the candidate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from .init import dense_weight, zeros
from .tensor import DEFAULT_DTYPE, check_finite

GATES = ("i", "f", "g", "o")
# stacked column order: sigmoid gates first, tanh candidate last
_STACKED = ("i", "f", "o", "g")


@dataclass(frozen=True)
class LstmSpec:
    input_size: int
    hidden_size: int = 64

    def validate_params(self, params: dict[str, np.ndarray], prefix: str = "") -> None:
        d, h = self.input_size, self.hidden_size
        for gate in GATES:
            shapes = {
                f"{prefix}wx_{gate}": (d, h),
                f"{prefix}wh_{gate}": (h, h),
                f"{prefix}b_{gate}": (h,),
            }
            for name, want in shapes.items():
                if name not in params:
                    raise ValidationError(f"missing LSTM parameter {name}")
                if params[name].shape != want:
                    raise ValidationError(
                        f"{name} has shape {params[name].shape}, expected {want}"
                    )


def lstm_init_params(
    spec: LstmSpec, rng: np.random.Generator, dtype=DEFAULT_DTYPE, prefix: str = ""
) -> dict[str, np.ndarray]:
    """Fan-scaled weights; forget-gate bias starts at 1, others at 0."""
    d, h = spec.input_size, spec.hidden_size
    params: dict[str, np.ndarray] = {}
    for gate in GATES:
        params[f"{prefix}wx_{gate}"] = dense_weight(d, h, rng, dtype)
        params[f"{prefix}wh_{gate}"] = dense_weight(h, h, rng, dtype)
        if gate == "f":
            params[f"{prefix}b_{gate}"] = np.full(h, 1.0, dtype=dtype)
        else:
            params[f"{prefix}b_{gate}"] = zeros(h, dtype)
    return params


def _stack(params: dict[str, np.ndarray], prefix: str):
    wx = np.concatenate([params[f"{prefix}wx_{g}"] for g in _STACKED], axis=1)
    wh = np.concatenate([params[f"{prefix}wh_{g}"] for g in _STACKED], axis=1)
    b = np.concatenate([params[f"{prefix}b_{g}"] for g in _STACKED])
    return wx, wh, b


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # stable one-pass form: sigma(x) = (1 + tanh(x/2)) / 2
    out = np.tanh(x * x.dtype.type(0.5))
    out += 1.0
    out *= x.dtype.type(0.5)
    return out


def lstm_forward(
    x: np.ndarray, params: dict[str, np.ndarray], spec: LstmSpec, prefix: str = ""
) -> tuple[np.ndarray, dict]:
    """Run the recurrence over (N, T, D) input; returns (N, T, H) hidden states."""
    n, t_len, d = x.shape
    if d != spec.input_size:
        raise ValidationError(f"input has {d} features, spec expects {spec.input_size}")
    h_size = spec.hidden_size
    wx, wh, b = _stack(params, prefix)
    dtype = x.dtype
    # input projections for all steps in one GEMM, biases folded in
    xproj = x.reshape(n * t_len, d) @ wx + b
    xproj = xproj.reshape(n, t_len, 4 * h_size)

    h = np.zeros((n, h_size), dtype=dtype)
    c = np.zeros((n, h_size), dtype=dtype)
    h_seq = np.empty((n, t_len, h_size), dtype=dtype)
    gates = np.empty((n, t_len, 4 * h_size), dtype=dtype)
    c_seq = np.empty((n, t_len, h_size), dtype=dtype)
    tanh_c = np.empty((n, t_len, h_size), dtype=dtype)
    for t in range(t_len):
        a = xproj[:, t] + h @ wh
        gt = gates[:, t]
        gt[:, : 3 * h_size] = _sigmoid(a[:, : 3 * h_size])
        gt[:, 3 * h_size :] = np.tanh(a[:, 3 * h_size :])
        i = gt[:, :h_size]
        f = gt[:, h_size : 2 * h_size]
        o = gt[:, 2 * h_size : 3 * h_size]
        g = gt[:, 3 * h_size :]
        c = f * c + i * g
        tc = np.tanh(c)
        h = o * tc
        c_seq[:, t] = c
        tanh_c[:, t] = tc
        h_seq[:, t] = h
    check_finite("lstm_forward", h_seq)
    cache = {"x": x, "gates": gates, "c_seq": c_seq, "tanh_c": tanh_c, "h_seq": h_seq}
    return h_seq, cache


def lstm_backward(
    grad_h_seq: np.ndarray,
    cache: dict,
    params: dict[str, np.ndarray],
    spec: LstmSpec,
    prefix: str = "",
) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    """Backprop through time; grad_h_seq is (N, T, H) (zeros where unused)."""
    x, gates, c_seq, tanh_c, h_seq = (
        cache["x"], cache["gates"], cache["c_seq"], cache["tanh_c"], cache["h_seq"],
    )
    n, t_len, d = x.shape
    h_size = spec.hidden_size
    wx, wh, _ = _stack(params, prefix)
    dtype = x.dtype

    da_seq = np.empty((n, t_len, 4 * h_size), dtype=dtype)
    dh_next = np.zeros((n, h_size), dtype=dtype)
    dc_next = np.zeros((n, h_size), dtype=dtype)
    for t in range(t_len - 1, -1, -1):
        gt = gates[:, t]
        i = gt[:, :h_size]
        f = gt[:, h_size : 2 * h_size]
        o = gt[:, 2 * h_size : 3 * h_size]
        g = gt[:, 3 * h_size :]
        tc = tanh_c[:, t]
        c_prev = c_seq[:, t - 1] if t > 0 else np.zeros((n, h_size), dtype=dtype)

        dh = grad_h_seq[:, t] + dh_next
        do = dh * tc
        dc = dh * o * (1.0 - tc * tc) + dc_next
        da = da_seq[:, t]
        da[:, :h_size] = (dc * g) * i * (1.0 - i)
        da[:, h_size : 2 * h_size] = (dc * c_prev) * f * (1.0 - f)
        da[:, 2 * h_size : 3 * h_size] = do * o * (1.0 - o)
        da[:, 3 * h_size :] = (dc * i) * (1.0 - g * g)
        dc_next = dc * f
        dh_next = da @ wh.T

    # batched parameter gradients over all steps
    h_prev = np.concatenate(
        [np.zeros((n, 1, h_size), dtype=dtype), h_seq[:, :-1]], axis=1
    )
    da_flat = da_seq.reshape(n * t_len, 4 * h_size)
    dwx = x.reshape(n * t_len, d).T @ da_flat
    dwh = h_prev.reshape(n * t_len, h_size).T @ da_flat
    db = da_flat.sum(axis=0)
    dx = (da_flat @ wx.T).reshape(n, t_len, d)

    grads: dict[str, np.ndarray] = {}
    for idx, gate in enumerate(_STACKED):
        sl = slice(idx * h_size, (idx + 1) * h_size)
        grads[f"{prefix}wx_{gate}"] = dwx[:, sl]
        grads[f"{prefix}wh_{gate}"] = dwh[:, sl]
        grads[f"{prefix}b_{gate}"] = db[sl]
    return dx, grads
