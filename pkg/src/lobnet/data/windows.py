"""Sliding-window assembly of model inputs.

A window anchored at index t covers the 100 rows t-99..t of a day's feature
matrix and carries the label(s) defined at t. Windows never cross a day
boundary. At 150k events per day a year of materialised windows would be
hundreds of gigabytes, so windows stay views into the day matrix until a
batch is actually assembled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from .labels import NO_LABEL
from .series import SeriesDay

WINDOW_LENGTH = 100


@dataclass(frozen=True)
class LabelledWindow:
    """One normalised input block plus its per-horizon class labels."""

    input: np.ndarray  # (100, n_features) view into the day matrix
    labels: dict[int, int]  # horizon -> class in {-1, 0, +1}
    anchor_t: int  # index of the window's last row within its day
    day_id: object = None

    def __post_init__(self):
        if self.input.shape[0] != WINDOW_LENGTH:
            raise ValidationError(
                f"window must have exactly {WINDOW_LENGTH} rows, got {self.input.shape[0]}"
            )
        for k, cls in self.labels.items():
            if cls not in (-1, 0, 1):
                raise ValidationError(f"label for horizon {k} out of range: {cls}")


class WindowDataset:
    """Lazy window collection over one day.

    Holds the day matrix plus the anchor indices whose requested labels are
    all defined; ``inputs`` materialises (copies) only the requested windows.
    """

    def __init__(self, day: SeriesDay, horizons: list[int], length: int = WINDOW_LENGTH):
        missing = [k for k in horizons if k not in day.labels]
        if missing:
            raise ValidationError(f"day {day.day_id} lacks labels for horizons {missing}")
        self.day = day
        self.length = length
        self.horizons = list(horizons)
        n = day.n_events
        if n < length:
            anchors = np.empty(0, dtype=np.int64)
        else:
            anchors = np.arange(length - 1, n, dtype=np.int64)
            for k in horizons:
                anchors = anchors[day.labels[k][anchors] != NO_LABEL]
        self.anchors = anchors

    def __len__(self) -> int:
        return self.anchors.size

    def __getitem__(self, i: int) -> LabelledWindow:
        t = int(self.anchors[i])
        return LabelledWindow(
            input=self.day.features[t - self.length + 1 : t + 1],
            labels={k: int(self.day.labels[k][t]) for k in self.horizons},
            anchor_t=t,
            day_id=self.day.day_id,
        )

    def inputs(self, idx: np.ndarray) -> np.ndarray:
        """Materialise windows ``idx`` as one (B, length, n_features) batch."""
        feats = self.day.features
        out = np.empty((len(idx), self.length, feats.shape[1]), dtype=np.float32)
        for row, i in enumerate(idx):
            t = self.anchors[i]
            out[row] = feats[t - self.length + 1 : t + 1]
        return out

    def labels_for(self, k: int, idx: np.ndarray | None = None) -> np.ndarray:
        anchors = self.anchors if idx is None else self.anchors[np.asarray(idx)]
        return self.day.labels[k][anchors].astype(np.int64)


def make_windows(day: SeriesDay, horizons: list[int]) -> WindowDataset:
    """Stride-1 windows of a day whose requested labels are all defined."""
    return WindowDataset(day, horizons)


class ConcatWindows:
    """Windows of several days exposed as one indexable dataset."""

    def __init__(self, datasets: list[WindowDataset]):
        self.datasets = [d for d in datasets if len(d)]
        sizes = [len(d) for d in self.datasets]
        self._offsets = np.concatenate([[0], np.cumsum(sizes)]) if sizes else np.zeros(1, dtype=int)

    def __len__(self) -> int:
        return int(self._offsets[-1])

    def _locate(self, idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        ds = np.searchsorted(self._offsets, idx, side="right") - 1
        return ds, idx - self._offsets[ds]

    def __getitem__(self, i: int) -> LabelledWindow:
        d, local = self._locate(np.asarray([i]))
        return self.datasets[int(d[0])][int(local[0])]

    def inputs(self, idx: np.ndarray) -> np.ndarray:
        idx = np.asarray(idx)
        ds, local = self._locate(idx)
        n_feat = self.datasets[0].day.n_features if self.datasets else 0
        length = self.datasets[0].length if self.datasets else WINDOW_LENGTH
        out = np.empty((idx.size, length, n_feat), dtype=np.float32)
        for row in range(idx.size):
            d = self.datasets[int(ds[row])]
            t = d.anchors[int(local[row])]
            out[row] = d.day.features[t - d.length + 1 : t + 1]
        return out

    def labels_for(self, k: int, idx: np.ndarray | None = None) -> np.ndarray:
        if idx is None:
            return np.concatenate([d.labels_for(k) for d in self.datasets]) if self.datasets else np.empty(0, np.int64)
        idx = np.asarray(idx)
        ds, local = self._locate(idx)
        out = np.empty(idx.size, dtype=np.int64)
        for row in range(idx.size):
            out[row] = self.datasets[int(ds[row])].labels_for(k, np.asarray([local[row]]))[0]
        return out

    def subsample(self, stride: int) -> "SubsetWindows":
        return SubsetWindows(self, np.arange(0, len(self), stride))


class SubsetWindows:
    """A fixed subset of another window dataset (e.g. every nth anchor)."""

    def __init__(self, base, indices: np.ndarray):
        self.base = base
        self.indices = np.asarray(indices)

    def __len__(self) -> int:
        return self.indices.size

    def __getitem__(self, i: int):
        return self.base[int(self.indices[i])]

    def inputs(self, idx: np.ndarray) -> np.ndarray:
        return self.base.inputs(self.indices[np.asarray(idx)])

    def labels_for(self, k: int, idx: np.ndarray | None = None) -> np.ndarray:
        sel = self.indices if idx is None else self.indices[np.asarray(idx)]
        return self.base.labels_for(k, sel)
