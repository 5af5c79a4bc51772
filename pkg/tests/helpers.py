"""Shared test utilities: independent oracles and finite-difference checks.

Everything here deliberately avoids the library's fast paths: the label
oracle is a literal per-index loop, the convolution oracle is a quadruple
loop, and gradients come from central differences. These stay independent of
the code they check.
"""

from __future__ import annotations

import numpy as np

from lobnet.data.labels import NO_LABEL


def max_rel_err(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    scale = max(np.abs(a).max(initial=0.0), np.abs(b).max(initial=0.0), 1e-10)
    return float(np.abs(a - b).max(initial=0.0) / scale)


def central_diff(f, x: np.ndarray, eps: float = 1e-5) -> np.ndarray:
    """Central finite-difference gradient of scalar f at x (float64)."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.ravel()
    gflat = grad.ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        fp = f(x)
        flat[i] = orig - eps
        fm = f(x)
        flat[i] = orig
        gflat[i] = (fp - fm) / (2.0 * eps)
    return grad


def central_diff_params(loss_fn, params: dict, name: str, eps: float = 1e-5,
                        max_coords: int | None = None, rng=None) -> tuple[np.ndarray, np.ndarray]:
    """FD gradient of loss_fn(params) w.r.t. params[name].

    Returns (coords, grads) where coords indexes the flattened tensor; when
    ``max_coords`` is set a random subset of coordinates is probed.
    """
    tensor = params[name]
    flat = tensor.ravel()
    coords = np.arange(flat.size)
    if max_coords is not None and flat.size > max_coords:
        rng = rng or np.random.default_rng(0)
        coords = rng.choice(flat.size, size=max_coords, replace=False)
    grads = np.zeros(coords.size)
    for pos, i in enumerate(coords):
        orig = flat[i]
        flat[i] = orig + eps
        fp = loss_fn(params)
        flat[i] = orig - eps
        fm = loss_fn(params)
        flat[i] = orig
        grads[pos] = (fp - fm) / (2.0 * eps)
    return coords, grads


def naive_conv2d(x, w, b, stride=(1, 1), pad_t=(0, 0), pad_f=(0, 0)):
    """Quadruple-loop cross-correlation oracle."""
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n, c, t, f = x.shape
    o, _, kt, kf = w.shape
    st, sf = stride
    xp = np.pad(x, ((0, 0), (0, 0), pad_t, pad_f))
    ot = (xp.shape[2] - kt) // st + 1
    of = (xp.shape[3] - kf) // sf + 1
    out = np.zeros((n, o, ot, of))
    for ni in range(n):
        for oi in range(o):
            for ti in range(ot):
                for fi in range(of):
                    acc = 0.0
                    for ci in range(c):
                        for i in range(kt):
                            for j in range(kf):
                                acc += w[oi, ci, i, j] * xp[ni, ci, ti * st + i, fi * sf + j]
                    out[ni, oi, ti, fi] = acc + b[oi]
    return out


def label_loop_oracle(mids, k, alpha, method="future-mean", past_window="printed"):
    """Literal transcription of the labelling rule, one index at a time."""
    mids = np.asarray(mids, dtype=np.float64)
    n = mids.size
    out = np.full(n, NO_LABEL, dtype=np.int8)
    for t in range(n):
        if t + k > n - 1:
            continue  # not enough future mids
        m_plus = np.sum(mids[t + 1 : t + k + 1]) / k
        if method == "future-mean":
            l_t = (m_plus - mids[t]) / mids[t]
        else:
            if past_window == "printed":
                if t - k < 0:
                    continue
                m_minus = np.sum(mids[t - k : t + 1]) / (k + 1)
            else:
                if t - k < 0:
                    continue
                m_minus = np.sum(mids[t - k : t]) / k
            l_t = (m_plus - m_minus) / m_minus
        if l_t > alpha:
            out[t] = 1
        elif l_t < -alpha:
            out[t] = -1
        else:
            out[t] = 0
    return out


def window_anchor_oracle(n_events, label_seq, window=100):
    """Enumerate anchors with a full window and a defined label."""
    anchors = []
    for t in range(n_events):
        if t >= window - 1 and label_seq[t] != NO_LABEL:
            anchors.append(t)
    return anchors


def lstm_scalar_oracle(x, wx, wh, b, hidden):
    """Step-by-step scalar recurrence of the standard cell.

    wx/wh/b are dicts keyed by gate letter (i, f, g, o); returns the (N, T, H)
    hidden state sequence computed with plain loops.
    """

    def sigmoid(v):
        return 1.0 / (1.0 + np.exp(-v))

    x = np.asarray(x, dtype=np.float64)
    n, t_len, _ = x.shape
    h_seq = np.zeros((n, t_len, hidden))
    for ni in range(n):
        h = np.zeros(hidden)
        c = np.zeros(hidden)
        for t in range(t_len):
            xt = x[ni, t]
            i = sigmoid(xt @ wx["i"] + h @ wh["i"] + b["i"])
            f = sigmoid(xt @ wx["f"] + h @ wh["f"] + b["f"])
            g = np.tanh(xt @ wx["g"] + h @ wh["g"] + b["g"])
            o = sigmoid(xt @ wx["o"] + h @ wh["o"] + b["o"])
            c = f * c + i * g
            h = o * np.tanh(c)
            h_seq[ni, t] = h
    return h_seq
