"""FI-2010 benchmark loader and the two standard evaluation splits.

Expected layout: a directory holding one whitespace-separated text matrix per
trading day (column = event), files sorted lexicographically in chronological
order. Within each file:

* rows 1..40 are the 10-level (ask price, ask volume, bid price, bid volume)
  features, already z-score normalised by the benchmark distribution;
* any further rows up to the last five are handcrafted features, parsed and
  ignored;
* the final five rows are direction labels for horizons 10/20/30/50/100,
  encoded 1/2/3 for up/stationary/down (mapped here to +1/0/-1).

Values and labels are passed through untouched. A loader self-check logs a
warning when the feature columns do not look z-scored or when the label
rows do not decode to a sane three-class distribution.

Splits:

* setup 2: days 1-7 train, days 8-10 test;
* setup 1, fold i (1..9): days 1..i train, day i+1 test.

``val_fraction`` optionally carves the tail of the last training day into a
separate validation day (kept within the training period, so no look-ahead).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import DataFormatError, ValidationError
from .series import SeriesDay

logger = logging.getLogger(__name__)

N_FEATURE_ROWS = 40
LABEL_HORIZONS = (10, 20, 30, 50, 100)
N_LABEL_ROWS = len(LABEL_HORIZONS)
# benchmark label encoding -> class
_LABEL_MAP = {1: 1, 2: 0, 3: -1}
N_DAYS = 10
N_FOLDS = 9


@dataclass
class DatasetSplits:
    train: list[SeriesDay] = field(default_factory=list)
    val: list[SeriesDay] = field(default_factory=list)
    test: list[SeriesDay] = field(default_factory=list)


def parse_day_file(path, day_id=None) -> SeriesDay:
    path = Path(path)
    try:
        matrix = np.loadtxt(path, dtype=np.float64, ndmin=2)
    except ValueError as exc:
        raise DataFormatError(f"{path}: non-numeric cell or ragged rows ({exc})") from exc
    if matrix.shape[0] < N_FEATURE_ROWS + N_LABEL_ROWS:
        raise DataFormatError(
            f"{path}: expected at least {N_FEATURE_ROWS + N_LABEL_ROWS} rows, "
            f"got {matrix.shape[0]}"
        )
    features = matrix[:N_FEATURE_ROWS].T.astype(np.float32)
    label_rows = matrix[-N_LABEL_ROWS:]
    labels = {}
    for k, row in zip(LABEL_HORIZONS, label_rows):
        coded = row.astype(np.int64)
        bad = ~np.isin(coded, list(_LABEL_MAP))
        if np.any(bad):
            raise DataFormatError(
                f"{path}: label row for horizon {k} contains values outside {{1,2,3}}"
            )
        decoded = np.empty(coded.size, dtype=np.int8)
        for code, cls in _LABEL_MAP.items():
            decoded[coded == code] = cls
        labels[k] = decoded
    return SeriesDay(day_id if day_id is not None else path.stem, features, labels=labels)


def _sanity_check(day: SeriesDay) -> None:
    feats = day.features
    mean = np.abs(feats.mean(axis=0))
    std = feats.std(axis=0)
    if np.any(mean > 0.5) or np.any((std < 0.5) | (std > 2.0)):
        logger.warning(
            "day %s: feature columns do not look z-scored "
            "(max |mean| %.3f, std range [%.3f, %.3f])",
            day.day_id, mean.max(), std.min(), std.max(),
        )
    counts = {cls: 0 for cls in (-1, 0, 1)}
    for seq in day.labels.values():
        for cls in (-1, 0, 1):
            counts[cls] += int((seq == cls).sum())
    total = sum(counts.values())
    if total and min(counts.values()) == 0:
        logger.warning("day %s: some label class never occurs (%s)", day.day_id, counts)
    elif total:
        logger.debug("day %s: label distribution %s", day.day_id, counts)


def load_days(path) -> list[SeriesDay]:
    path = Path(path)
    if not path.exists():
        raise DataFormatError(f"dataset path {path} does not exist")
    files = sorted(p for p in path.iterdir() if p.is_file())
    if not files:
        raise DataFormatError(f"no day files found in {path}")
    days = []
    for i, f in enumerate(files):
        day = parse_day_file(f, day_id=f"d{i + 1:02d}_{f.stem}")
        _sanity_check(day)
        days.append(day)
    return days


def split_days(
    days: list[SeriesDay], setup: int, fold: int = 1, val_fraction: float = 0.0
) -> DatasetSplits:
    """Apply the setup-1 anchored fold or the setup-2 7/3 split to ``days``."""
    if setup not in (1, 2):
        raise ValidationError(f"setup must be 1 or 2, got {setup}")
    if not 0.0 <= val_fraction < 1.0:
        raise ValidationError(f"val_fraction must be in [0, 1), got {val_fraction}")
    if setup == 2:
        if len(days) < N_DAYS:
            raise DataFormatError(f"setup 2 needs {N_DAYS} days, found {len(days)}")
        train, test = list(days[:7]), list(days[7:10])
    else:
        if not 1 <= fold <= N_FOLDS:
            raise ValidationError(f"setup 1 fold must be in 1..{N_FOLDS}, got {fold}")
        if len(days) < fold + 1:
            raise DataFormatError(f"fold {fold} needs {fold + 1} days, found {len(days)}")
        train, test = list(days[:fold]), [days[fold]]
    splits = DatasetSplits(train=train, test=test)
    if val_fraction > 0.0:
        last = splits.train[-1]
        cut = int(round(last.n_events * (1.0 - val_fraction)))
        cut = min(max(cut, 1), last.n_events - 1)
        splits.train[-1] = last.slice(0, cut)
        splits.val = [last.slice(cut, last.n_events, day_id=f"{last.day_id}_val")]
    return splits


def load_fi2010(path, setup: int, fold: int = 1, val_fraction: float = 0.0) -> DatasetSplits:
    """Parse a day-per-file FI-2010 directory and split it."""
    return split_days(load_days(path), setup, fold=fold, val_fraction=val_fraction)
