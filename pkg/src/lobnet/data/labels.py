"""Smoothed direction labels for mid-price sequences.

Raw tick-to-tick comparisons make for noisy targets, so direction is judged
from k-step means of the mid-price. Two methods are supported:

* ``future-mean``: relative change of the mean of the next k mids against the
  current mid.
* ``bilateral-mean``: relative change of the future mean against a mean taken
  over the recent past, which yields smoother, more tradeable label runs.

For ``bilateral-mean`` the past mean window is selectable: ``"printed"``
averages the k+1 mids at t-k..t (the current mid included), ``"symmetric"``
averages the k mids at t-k..t-1, mirroring the future window. ``printed`` is
the default.

A move is labelled +1 when the relative change exceeds alpha, -1 below
-alpha, else 0 (strict inequalities, so a change of exactly alpha is
stationary). Positions without enough history or future carry ``NO_LABEL``.
"""

from __future__ import annotations

import numpy as np

from ..errors import ValidationError

# Sentinel for "no label defined at this index"; classes proper are -1/0/+1.
NO_LABEL: int = 127

METHODS = ("future-mean", "bilateral-mean")
PAST_WINDOWS = ("printed", "symmetric")


def _window_means(x: np.ndarray, width: int) -> np.ndarray:
    """Means of every length-``width`` contiguous window of ``x``.

    Uses per-window sums (not a running cumsum) so each mean is the plain
    sum of its own slice; the brute-force verification oracle computes the
    same quantity the same way.
    """
    windows = np.lib.stride_tricks.sliding_window_view(x, width)
    return windows.sum(axis=-1) / width


def relative_change(
    mids: np.ndarray,
    k: int,
    method: str = "future-mean",
    past_window: str = "printed",
) -> np.ndarray:
    """Per-index relative mid-price change l_t; NaN where undefined."""
    if k < 1:
        raise ValidationError(f"horizon k must be >= 1, got {k}")
    if method not in METHODS:
        raise ValidationError(f"method must be one of {METHODS}, got {method!r}")
    if past_window not in PAST_WINDOWS:
        raise ValidationError(f"past_window must be one of {PAST_WINDOWS}, got {past_window!r}")
    mids = np.asarray(mids, dtype=np.float64)
    n = mids.size
    out = np.full(n, np.nan)
    if n < k + 1:
        return out

    # future mean over t+1..t+k, defined for t <= n-1-k
    m_plus = _window_means(mids[1:], k) if n - 1 >= k else np.empty(0)

    if method == "future-mean":
        t_max = n - 1 - k
        p_t = mids[: t_max + 1]
        out[: t_max + 1] = (m_plus - p_t) / p_t
        return out

    if past_window == "printed":
        # mean over t-k..t inclusive (k+1 terms), defined for t >= k
        m_minus = _window_means(mids, k + 1)
        first_t = k
    else:
        # mean over t-k..t-1 (k terms), defined for t >= k
        m_minus = _window_means(mids[:-1], k)
        first_t = k
    t_max = n - 1 - k
    if t_max < first_t:
        return out
    minus = m_minus[: t_max - first_t + 1]
    plus = m_plus[first_t : t_max + 1]
    out[first_t : t_max + 1] = (plus - minus) / minus
    return out


def smooth_labels(
    mids: np.ndarray,
    k: int,
    alpha: float,
    method: str = "future-mean",
    past_window: str = "printed",
) -> np.ndarray:
    """Classify each index as -1 / 0 / +1 by thresholded smoothed change.

    Returns an int8 array aligned with ``mids``; indices lacking the needed
    past or future mids hold ``NO_LABEL``.
    """
    if alpha < 0:
        raise ValidationError(f"alpha must be >= 0, got {alpha}")
    l_t = relative_change(mids, k, method=method, past_window=past_window)
    labels = np.full(l_t.size, NO_LABEL, dtype=np.int8)
    defined = ~np.isnan(l_t)
    vals = l_t[defined]
    cls = np.zeros(vals.size, dtype=np.int8)
    cls[vals > alpha] = 1
    cls[vals < -alpha] = -1
    labels[defined] = cls
    return labels


def tercile_alpha(
    mids,
    k: int,
    method: str = "future-mean",
    past_window: str = "printed",
) -> float:
    """Threshold that splits the observed changes roughly into terciles.

    Picks alpha so about a third of the defined l_t fall above it and a third
    below -alpha; with a symmetric change distribution the three classes come
    out near-uniform. ``mids`` may be one series or a list of per-day series
    (changes are never computed across the day boundary).
    """
    series = mids if isinstance(mids, (list, tuple)) else [mids]
    chunks = []
    for m in series:
        l_t = relative_change(m, k, method=method, past_window=past_window)
        chunks.append(l_t[~np.isnan(l_t)])
    vals = np.concatenate(chunks) if chunks else np.empty(0)
    if vals.size == 0:
        raise ValidationError("no defined changes to estimate terciles from")
    hi = float(np.quantile(vals, 2.0 / 3.0))
    lo = float(np.quantile(vals, 1.0 / 3.0))
    return max((hi - lo) / 2.0, 0.0)
