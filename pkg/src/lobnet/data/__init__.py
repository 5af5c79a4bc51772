"""Dataset ingestion, normalisation, labelling and window assembly."""

from .canonical import read_day, read_days, write_day, write_days
from .fi2010 import DatasetSplits, load_days, load_fi2010, parse_day_file, split_days
from .labels import NO_LABEL, relative_change, smooth_labels, tercile_alpha
from .series import (
    AccessLog,
    NormalizationStats,
    SeriesDay,
    attach_access_log,
    guard_no_train_reads,
    rolling_zscore,
)
from .synthetic import GeneratorConfig, synth_generate
from .windows import ConcatWindows, LabelledWindow, WindowDataset, make_windows

__all__ = [
    "read_day", "read_days", "write_day", "write_days",
    "DatasetSplits", "load_days", "load_fi2010", "parse_day_file", "split_days",
    "NO_LABEL", "relative_change", "smooth_labels", "tercile_alpha",
    "AccessLog", "NormalizationStats", "SeriesDay",
    "attach_access_log", "guard_no_train_reads", "rolling_zscore",
    "GeneratorConfig", "synth_generate",
    "ConcatWindows", "LabelledWindow", "WindowDataset", "make_windows",
]
