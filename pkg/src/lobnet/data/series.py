"""Per-day event series and the rolling normalisation scheme.

A ``SeriesDay`` is one trading day's stream of 40-feature book states plus
the raw mid-price sequence used for labelling and the trading simulation.
Feature reads can be recorded through an attached :class:`AccessLog`, which
is how the evaluation runners prove that test days are never touched while
training.

Normalisation is a rolling z-score: each day is standardised per feature
column by the mean/std of the previous up-to-5 days, never its own data and
never data from another instrument. The first day of a run has no history
and is dropped from the normalised output.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..errors import LookaheadError, ValidationError

logger = logging.getLogger(__name__)

DEFAULT_LOOKBACK_DAYS = 5


class AccessLog:
    """Records which day's features were read during which phase."""

    def __init__(self):
        self.phase = "init"
        self.events: list[tuple[str, object]] = []

    def record(self, day_id) -> None:
        self.events.append((self.phase, day_id))

    def reads_during(self, phase: str) -> set:
        return {day_id for p, day_id in self.events if p == phase}


class SeriesDay:
    """One day's ordered feature rows, raw mids and optional labels.

    ``features`` is an (n_events, 40) array in the standard per-level
    (ask price, ask volume, bid price, bid volume) layout; ``mids`` always
    refers to the raw (pre-normalisation) mid-prices so labels and simulated
    fills stay in price units. ``labels`` maps horizon k to an int8 sequence
    aligned with the rows (see labels.NO_LABEL).
    """

    def __init__(
        self,
        day_id,
        features: np.ndarray,
        mids: np.ndarray | None = None,
        timestamps: np.ndarray | None = None,
        labels: dict[int, np.ndarray] | None = None,
    ):
        features = np.asarray(features)
        if features.ndim != 2 or features.shape[0] == 0:
            raise ValidationError(f"features must be a non-empty 2-d array, got {features.shape}")
        if timestamps is not None:
            timestamps = np.asarray(timestamps)
            if timestamps.shape[0] != features.shape[0]:
                raise ValidationError("timestamps length does not match features")
            if np.any(np.diff(timestamps) < 0):
                raise ValidationError("timestamps must be non-decreasing")
        if mids is None:
            # columns 0 and 2 are best ask price and best bid price
            mids = (features[:, 0] + features[:, 2]) / 2.0
        mids = np.asarray(mids, dtype=np.float64)
        if mids.shape[0] != features.shape[0]:
            raise ValidationError("mids length does not match features")
        self.day_id = day_id
        self._features = features
        self.mids = mids
        self.timestamps = timestamps
        self.labels = dict(labels) if labels else {}
        self.access_log: AccessLog | None = None

    @property
    def features(self) -> np.ndarray:
        if self.access_log is not None:
            self.access_log.record(self.day_id)
        return self._features

    @property
    def n_events(self) -> int:
        return self._features.shape[0]

    @property
    def n_features(self) -> int:
        return self._features.shape[1]

    def slice(self, start: int, stop: int, day_id=None) -> "SeriesDay":
        """A new day holding rows [start:stop); used to carve validation tails."""
        if not 0 <= start < stop <= self.n_events:
            raise ValidationError(f"bad slice [{start}:{stop}) for {self.n_events} events")
        return SeriesDay(
            day_id if day_id is not None else self.day_id,
            self._features[start:stop],
            mids=self.mids[start:stop],
            timestamps=None if self.timestamps is None else self.timestamps[start:stop],
            labels={k: v[start:stop] for k, v in self.labels.items()},
        )


def attach_access_log(days, log: AccessLog) -> AccessLog:
    for day in days:
        day.access_log = log
    return log


def guard_no_train_reads(log: AccessLog, test_day_ids) -> None:
    touched = log.reads_during("train") & set(test_day_ids)
    if touched:
        raise LookaheadError(f"test days {sorted(touched)} were read during training")


@dataclass
class NormalizationStats:
    """Per-feature mean/std and the days they were estimated from."""

    mean: np.ndarray
    std: np.ndarray
    source_window: list = field(default_factory=list)

    def __post_init__(self):
        if np.any(self.std < 0):
            raise ValidationError("std must be non-negative")

    @property
    def zero_std_features(self) -> np.ndarray:
        return np.flatnonzero(self.std == 0)


def rolling_zscore(
    days: list[SeriesDay], lookback: int = DEFAULT_LOOKBACK_DAYS
) -> tuple[list[SeriesDay], list[NormalizationStats]]:
    """Standardise each day by the previous up-to-``lookback`` days' stats.

    Only past days feed a day's statistics, so there is no look-ahead. Days
    with no preceding day (the first of the run) are excluded from the
    output. Columns with zero std are normalised with std 1 and logged.
    """
    if lookback < 1:
        raise ValidationError(f"lookback must be >= 1, got {lookback}")
    out_days: list[SeriesDay] = []
    out_stats: list[NormalizationStats] = []
    for i, day in enumerate(days):
        if i == 0:
            logger.info("day %s has no preceding day; excluded from normalised output", day.day_id)
            continue
        window = days[max(0, i - lookback) : i]
        stacked = np.concatenate([d.features for d in window], axis=0)
        mean = stacked.mean(axis=0)
        std = stacked.std(axis=0)
        stats = NormalizationStats(mean=mean, std=std, source_window=[d.day_id for d in window])
        safe_std = np.where(std == 0, 1.0, std)
        if stats.zero_std_features.size:
            logger.warning(
                "day %s: features %s constant over lookback window, using std 1",
                day.day_id,
                stats.zero_std_features.tolist(),
            )
        normalised = (day.features - mean) / safe_std
        out_days.append(
            SeriesDay(
                day.day_id,
                normalised.astype(np.float32),
                mids=day.mids,
                timestamps=day.timestamps,
                labels=day.labels,
            )
        )
        out_stats.append(stats)
    return out_days, out_stats
