"""Confusion matrices, the four headline metrics, and protocol runners.

Metrics follow the convention of the published benchmark tables: per-class
precision/recall/F1 with 0/0 defined as 0, aggregated either support-weighted
(the headline mode; its recall coincides with accuracy identically) or as an
unweighted macro mean for cross-paper comparison.

The runners enforce the anchored-fold protocol (setup 1), the fixed 7/3 day
split (setup 2), and a rolling train/validation/test protocol for raw day
streams. Test days are wrapped with an access log so any feature read during
the training phase raises.
"""

from __future__ import annotations

import csv
import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data.fi2010 import DatasetSplits, split_days
from .data.labels import smooth_labels, tercile_alpha
from .data.series import AccessLog, attach_access_log, guard_no_train_reads, rolling_zscore
from .data.windows import ConcatWindows, make_windows
from .errors import ValidationError
from .model import ModelConfig, build, parameter_count, predict_proba
from .train import ClassifierData, TrainSchedule, train

logger = logging.getLogger(__name__)

CLASSES = (-1, 0, 1)


@dataclass(frozen=True)
class ConfusionMatrix:
    """3x3 counts indexed (true class, predicted class) over (-1, 0, +1)."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        if c.shape != (3, 3) or np.any(c < 0):
            raise ValidationError(f"confusion matrix must be 3x3 non-negative, got {self.counts}")
        object.__setattr__(self, "counts", c)

    @classmethod
    def from_predictions(cls, y_true, y_pred) -> "ConfusionMatrix":
        y_true = np.asarray(y_true)
        y_pred = np.asarray(y_pred)
        if y_true.shape != y_pred.shape:
            raise ValidationError("prediction/label length mismatch")
        counts = np.zeros((3, 3), dtype=np.int64)
        for ti, t in enumerate(CLASSES):
            for pi, p in enumerate(CLASSES):
                counts[ti, pi] = int(np.sum((y_true == t) & (y_pred == p)))
        return cls(counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def row_normalised(self) -> np.ndarray:
        """Per-true-class percentages, rows summing to 100."""
        sums = self.counts.sum(axis=1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.where(sums > 0, 100.0 * self.counts / sums, 0.0)
        return out


@dataclass(frozen=True)
class PerClass:
    cls: int
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class MetricReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    mode: str
    per_class: tuple[PerClass, ...] = ()

    def as_dict(self) -> dict:
        return {
            "accuracy": self.accuracy, "precision": self.precision,
            "recall": self.recall, "f1": self.f1, "mode": self.mode,
            "per_class": [vars(pc) for pc in self.per_class],
        }


def _safe_div(num: float, den: float) -> float:
    return num / den if den else 0.0


def metrics(cm: ConfusionMatrix, mode: str = "weighted") -> MetricReport:
    """Aggregate per-class precision/recall/F1 over a confusion matrix."""
    if mode not in ("weighted", "macro"):
        raise ValidationError(f"mode must be 'weighted' or 'macro', got {mode!r}")
    counts = cm.counts
    total = cm.total
    if total == 0:
        raise ValidationError("cannot compute metrics of an empty confusion matrix")
    accuracy = float(np.trace(counts)) / total
    per_class = []
    for i, cls in enumerate(CLASSES):
        tp = float(counts[i, i])
        support = int(counts[i].sum())
        predicted = float(counts[:, i].sum())
        precision = _safe_div(tp, predicted)
        recall = _safe_div(tp, support)
        f1 = _safe_div(2.0 * precision * recall, precision + recall)
        per_class.append(PerClass(cls, precision, recall, f1, support))
    if mode == "macro":
        agg = [float(np.mean([getattr(pc, m) for pc in per_class])) for m in ("precision", "recall", "f1")]
    else:
        supports = np.array([pc.support for pc in per_class], dtype=float)
        agg = [
            float(sum(getattr(pc, m) * pc.support for pc in per_class) / total)
            for m in ("precision", "recall", "f1")
        ]
        # support-weighted recall is sum(tp)/total, i.e. accuracy, exactly;
        # use the simplified form so the identity holds to the last bit
        agg[1] = accuracy
    return MetricReport(
        accuracy=accuracy, precision=agg[0], recall=agg[1], f1=agg[2],
        mode=mode, per_class=tuple(per_class),
    )


@dataclass
class EvalOutcome:
    horizon: int
    report: MetricReport
    confusion: ConfusionMatrix


def mean_report(reports: list[MetricReport]) -> MetricReport:
    """Unweighted arithmetic mean of fold-level aggregates."""
    if not reports:
        raise ValidationError("no reports to average")
    return MetricReport(
        accuracy=float(np.mean([r.accuracy for r in reports])),
        precision=float(np.mean([r.precision for r in reports])),
        recall=float(np.mean([r.recall for r in reports])),
        f1=float(np.mean([r.f1 for r in reports])),
        mode=reports[0].mode,
    )


def default_trainer(cfg: ModelConfig, schedule: TrainSchedule, build_seed: int = 0):
    """Trainer factory: fits a fresh model and returns its predict function."""

    def fit(train_windows, val_windows, horizon: int):
        params = build(cfg, seed=build_seed)
        val = ClassifierData(val_windows, horizon) if val_windows is not None and len(val_windows) else None
        result = train(params, ClassifierData(train_windows, horizon), val, schedule, cfg)
        return lambda x: predict_proba(result.params, x, cfg)

    return fit


def evaluate_windows(predict_fn, windows, horizon: int, batch_size: int = 512) -> EvalOutcome:
    """Confusion matrix and metrics of a predictor over labelled windows."""
    if len(windows) == 0:
        raise ValidationError("no windows to evaluate")
    y_true = windows.labels_for(horizon)
    preds = np.empty(len(windows), dtype=np.int64)
    for start in range(0, len(windows), batch_size):
        idx = np.arange(start, min(start + batch_size, len(windows)))
        probs = predict_fn(windows.inputs(idx)[:, None, :, :])
        preds[idx] = probs.argmax(axis=1) - 1
    cm = ConfusionMatrix.from_predictions(y_true, preds)
    return EvalOutcome(horizon, metrics(cm), cm)


def _run_split(splits, horizons, trainer, train_stride: int = 1) -> dict[int, EvalOutcome]:
    log = AccessLog()
    attach_access_log(splits.train + splits.val + splits.test, log)
    outcomes = {}
    for k in horizons:
        log.phase = "train"
        train_ws = ConcatWindows([make_windows(d, [k]) for d in splits.train])
        if train_stride > 1:
            train_ws = train_ws.subsample(train_stride)
        val_ws = ConcatWindows([make_windows(d, [k]) for d in splits.val]) if splits.val else None
        predict_fn = trainer(train_ws, val_ws, k)
        guard_no_train_reads(log, [d.day_id for d in splits.test])
        log.phase = "eval"
        test_ws = ConcatWindows([make_windows(d, [k]) for d in splits.test])
        outcomes[k] = evaluate_windows(predict_fn, test_ws, k)
    return outcomes


def run_setup1(days, horizons, trainer, folds=range(1, 10), val_fraction: float = 0.0,
               train_stride: int = 1) -> dict[int, dict]:
    """Anchored-fold protocol: fold i trains on days 1..i, tests on day i+1."""
    per_fold: dict[int, list[EvalOutcome]] = {k: [] for k in horizons}
    for fold in folds:
        splits = split_days(days, setup=1, fold=fold, val_fraction=val_fraction)
        outcomes = _run_split(splits, horizons, trainer, train_stride)
        for k in horizons:
            per_fold[k].append(outcomes[k])
    return {
        k: {"folds": per_fold[k], "mean": mean_report([o.report for o in per_fold[k]])}
        for k in horizons
    }


def run_setup2(days, horizons, trainer, val_fraction: float = 0.0,
               train_stride: int = 1) -> dict[int, EvalOutcome]:
    """Fixed split: first 7 days train, last 3 days test."""
    splits = split_days(days, setup=2, val_fraction=val_fraction)
    return _run_split(splits, horizons, trainer, train_stride)


def run_rolling(days, horizons, trainer, k_alpha: dict[int, float] | None = None,
                method: str = "bilateral-mean", past_window: str = "printed",
                lookback: int = 5, train_frac: float = 0.5, val_frac: float = 0.25,
                train_stride: int = 1) -> dict[int, EvalOutcome]:
    """Rolling protocol for raw day streams: normalise, label, split by day.

    ``k_alpha`` maps horizon -> threshold; horizons missing from it get a
    tercile-balanced threshold estimated on the training days only.
    """
    if len(days) < 4:
        raise ValidationError("rolling protocol needs at least 4 days")
    normalised, _ = rolling_zscore(days, lookback=lookback)
    n = len(normalised)
    n_train = max(int(round(n * train_frac)), 1)
    n_val = max(int(round(n * val_frac)), 1)
    if n_train + n_val >= n:
        raise ValidationError("train/val fractions leave no test days")
    k_alpha = dict(k_alpha or {})
    for k in horizons:
        if k not in k_alpha:
            train_mids = [d.mids for d in normalised[:n_train]]
            k_alpha[k] = tercile_alpha(train_mids, k, method=method, past_window=past_window)
        for day in normalised:
            day.labels[k] = smooth_labels(day.mids, k, k_alpha[k], method=method, past_window=past_window)

    splits = DatasetSplits(
        train=normalised[:n_train],
        val=normalised[n_train : n_train + n_val],
        test=normalised[n_train + n_val :],
    )
    return _run_split(splits, horizons, trainer, train_stride)


def bench_forward(params, cfg: ModelConfig, batch_sizes=(1,), repeats: int = 1000,
                  warmup: int = 50, seed: int = 0) -> dict:
    """Median and p99 wall-clock per forward pass, plus the parameter count."""
    rng = np.random.default_rng(seed)
    rows = []
    for bs in batch_sizes:
        x = rng.standard_normal((bs, 1, cfg.time_steps, cfg.features)).astype(np.float32)
        for _ in range(warmup):
            predict_proba(params, x, cfg, batch_size=bs)
        samples = np.empty(repeats)
        for i in range(repeats):
            t0 = time.perf_counter()
            predict_proba(params, x, cfg, batch_size=bs)
            samples[i] = time.perf_counter() - t0
        rows.append(
            {
                "batch_size": bs,
                "median_ms": float(np.median(samples) * 1e3),
                "p99_ms": float(np.quantile(samples, 0.99) * 1e3),
            }
        )
    return {"parameter_count": parameter_count(params), "timings": rows}


# ---------------------------------------------------------------------------
# report output
# ---------------------------------------------------------------------------

def write_report_json(path, outcome_by_horizon: dict[int, EvalOutcome]) -> None:
    payload = {
        str(k): {"report": o.report.as_dict(), "confusion": o.confusion.counts.tolist()}
        for k, o in outcome_by_horizon.items()
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True))


def write_report_csv(path, outcome_by_horizon: dict[int, EvalOutcome]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["horizon", "accuracy", "precision", "recall", "f1", "mode"])
        for k in sorted(outcome_by_horizon):
            r = outcome_by_horizon[k].report
            writer.writerow([k, repr(r.accuracy), repr(r.precision), repr(r.recall), repr(r.f1), r.mode])


def write_confusion_csv(path, cm: ConfusionMatrix, normalised: bool = False) -> None:
    data = cm.row_normalised() if normalised else cm.counts
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["true\\pred"] + [str(c) for c in CLASSES])
        for i, cls in enumerate(CLASSES):
            row = [f"{v:.2f}" for v in data[i]] if normalised else [str(int(v)) for v in data[i]]
            writer.writerow([str(cls)] + row)


def format_report_table(outcome_by_horizon: dict[int, EvalOutcome]) -> str:
    """Plain-text table, one row per horizon, percentages like the benchmark tables."""
    lines = [f"{'Horizon':>8} {'Accuracy %':>11} {'Precision %':>12} {'Recall %':>9} {'F1 %':>7}"]
    for k in sorted(outcome_by_horizon):
        r = outcome_by_horizon[k].report
        lines.append(
            f"{k:>8} {100 * r.accuracy:>11.2f} {100 * r.precision:>12.2f} "
            f"{100 * r.recall:>9.2f} {100 * r.f1:>7.2f}"
        )
    return "\n".join(lines)
