"""Local perturbation explanations of a single window prediction.

The window is tiled into rectangles (default 10 time steps by one level's
price/volume pair on one side, 200 tiles). Random binary masks switch tiles
off by replacing them with the baseline value 0, which in normalised feature
space is the feature mean. The model's probability of the explained class is
queried for each masked variant, samples are weighted by an exponential
kernel on how many tiles were removed, and a ridge-regularised weighted
linear fit of mask -> probability yields one attribution weight per tile:
positive tiles support the prediction, negative tiles oppose it.

The all-ones mask is always included, and masking nothing reproduces the
model's unperturbed probability exactly.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateDesignError, ValidationError

DEFAULT_RIDGE = 1e-2


@dataclass(frozen=True)
class RegionGrid:
    """Exact rectangular tiling of a (time_steps, features) window."""

    time_steps: int = 100
    features: int = 40
    time_tile: int = 10
    feature_tile: int = 2

    def __post_init__(self):
        if self.time_steps % self.time_tile or self.features % self.feature_tile:
            raise ValidationError(
                f"tiles ({self.time_tile}, {self.feature_tile}) do not partition "
                f"a ({self.time_steps}, {self.features}) window"
            )

    @property
    def n_time_tiles(self) -> int:
        return self.time_steps // self.time_tile

    @property
    def n_feature_tiles(self) -> int:
        return self.features // self.feature_tile

    @property
    def n_tiles(self) -> int:
        return self.n_time_tiles * self.n_feature_tiles

    def tile_slices(self, tile: int) -> tuple[slice, slice]:
        ti, fi = divmod(tile, self.n_feature_tiles)
        return (
            slice(ti * self.time_tile, (ti + 1) * self.time_tile),
            slice(fi * self.feature_tile, (fi + 1) * self.feature_tile),
        )

    def expand(self, tile_values: np.ndarray) -> np.ndarray:
        """Broadcast per-tile values (..., n_tiles) to (..., time, features)."""
        tv = np.asarray(tile_values)
        grid = tv.reshape(tv.shape[:-1] + (self.n_time_tiles, self.n_feature_tiles))
        grid = np.repeat(grid, self.time_tile, axis=-2)
        return np.repeat(grid, self.feature_tile, axis=-1)

    def apply_masks(self, x: np.ndarray, masks: np.ndarray, baseline: float = 0.0) -> np.ndarray:
        """Masked copies of ``x``: tile off -> baseline value."""
        keep = self.expand(masks).astype(bool)
        return np.where(keep, x, baseline).astype(x.dtype)


@dataclass
class Explanation:
    weights: np.ndarray  # one attribution per tile
    top_positive: list[tuple[int, float]]
    top_negative: list[tuple[int, float]]
    r2: float
    target_class: int
    full_probability: float
    grid: RegionGrid


def explain(
    predict_fn,
    x: np.ndarray,
    target_class: int,
    n_samples: int = 1000,
    seed: int = 0,
    grid: RegionGrid | None = None,
    kernel_width: float | None = None,
    ridge: float = DEFAULT_RIDGE,
    baseline: float = 0.0,
    batch_size: int = 128,
    top_k: int = 10,
) -> Explanation:
    """Fit a local linear surrogate around one window.

    ``predict_fn`` maps a batch (B, 1, T, F) to class probabilities (B, 3);
    ``x`` is the (T, F) window. Deterministic for a fixed seed.
    """
    x = np.asarray(x)
    grid = grid or RegionGrid(time_steps=x.shape[0], features=x.shape[1])
    if x.shape != (grid.time_steps, grid.features):
        raise ValidationError(f"window shape {x.shape} does not match grid")
    if n_samples < 2:
        raise ValidationError("n_samples must be >= 2")
    rng = np.random.default_rng(seed)
    masks = rng.integers(0, 2, size=(n_samples, grid.n_tiles), dtype=np.int8)
    masks[0] = 1  # anchor sample: the unperturbed window
    if np.any(masks.min(axis=0) == masks.max(axis=0)):
        raise DegenerateDesignError(
            "some tiles were never toggled across the sample; increase n_samples"
        )

    probs = np.empty(n_samples)
    for start in range(0, n_samples, batch_size):
        chunk = masks[start : start + batch_size]
        xb = grid.apply_masks(x, chunk, baseline)[:, None, :, :]
        out = np.asarray(predict_fn(xb))
        probs[start : start + batch_size] = out[:, target_class]

    width = kernel_width if kernel_width is not None else 0.25 * np.sqrt(grid.n_tiles)
    distance = grid.n_tiles - masks.sum(axis=1)
    sample_w = np.exp(-((distance / width) ** 2))

    # weighted ridge with an unpenalised intercept
    z = np.empty((n_samples, grid.n_tiles + 1))
    z[:, 0] = 1.0
    z[:, 1:] = masks
    zw = z * sample_w[:, None]
    a = z.T @ zw
    a[1:, 1:] += ridge * np.eye(grid.n_tiles)
    b = zw.T @ probs
    try:
        beta = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise DegenerateDesignError(f"singular design matrix ({exc}); increase n_samples") from exc
    weights = beta[1:]

    fitted = z @ beta
    w_mean = float(np.average(probs, weights=sample_w))
    ss_res = float(np.sum(sample_w * (probs - fitted) ** 2))
    ss_tot = float(np.sum(sample_w * (probs - w_mean) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0

    order = np.argsort(-np.abs(weights), kind="stable")
    top_positive = [(int(i), float(weights[i])) for i in order if weights[i] > 0][:top_k]
    top_negative = [(int(i), float(weights[i])) for i in order if weights[i] < 0][:top_k]
    return Explanation(
        weights=weights,
        top_positive=top_positive,
        top_negative=top_negative,
        r2=r2,
        target_class=int(target_class),
        full_probability=float(probs[0]),
        grid=grid,
    )


def attribution_matrix(expl: Explanation) -> np.ndarray:
    """Tile weights painted back onto the full (time, features) plane."""
    return expl.grid.expand(expl.weights)


def write_attribution_csv(path, expl: Explanation) -> None:
    matrix = attribution_matrix(expl)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in matrix:
            writer.writerow([repr(float(v)) for v in row])


def read_attribution_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [[float(v) for v in row] for row in csv.reader(fh)]
    return np.asarray(rows, dtype=np.float64)


def write_heatmap_ppm(path, expl: Explanation) -> None:
    """Binary portable pixmap: green supports the class, red opposes it.

    Time runs along x, features along y; a window with all-zero attributions
    renders uniformly neutral grey. Flipping the sign of every attribution
    swaps the red and green channels exactly.
    """
    matrix = attribution_matrix(expl)  # (T, F)
    peak = np.abs(matrix).max()
    scaled = matrix / peak if peak > 0 else np.zeros_like(matrix)
    img = matrix.T  # rows = features, cols = time
    scaled = scaled.T
    height, width = img.shape
    base = 128
    pos = np.rint(127 * np.maximum(scaled, 0.0)).astype(np.uint8)
    neg = np.rint(127 * np.maximum(-scaled, 0.0)).astype(np.uint8)
    pixels = np.empty((height, width, 3), dtype=np.uint8)
    pixels[..., 0] = base + neg  # red: against
    pixels[..., 1] = base + pos  # green: supportive
    pixels[..., 2] = base
    with open(path, "wb") as fh:
        fh.write(f"P6\n{width} {height}\n255\n".encode())
        fh.write(pixels.tobytes())


def read_heatmap_ppm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P6":
        raise ValidationError(f"{path} is not a binary PPM")
    width, height = (int(v) for v in parts[1].split())
    pixels = np.frombuffer(parts[3], dtype=np.uint8, count=width * height * 3)
    return pixels.reshape(height, width, 3).copy()
