"""Canonical on-disk day format.

One file per day, binary little-endian:

    magic   4 bytes  b"LOB1"
    version u32      currently 1
    n_events u64
    n_features u32
    features        n_events * n_features float32, row-major
    n_horizons u32
    horizons        n_horizons * u32
    labels          n_horizons rows of n_events int8 (127 = no label)

The label block is optional in the sense that n_horizons may be 0 (e.g. a
freshly ingested or generated day before the labelling step).
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..errors import DataFormatError
from .series import SeriesDay

MAGIC = b"LOB1"
VERSION = 1
_HEADER = struct.Struct("<4sIQI")


def write_day(path, day: SeriesDay) -> None:
    path = Path(path)
    feats = np.ascontiguousarray(day.features, dtype="<f4")
    horizons = sorted(day.labels)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, day.n_events, day.n_features))
        fh.write(feats.tobytes())
        fh.write(struct.pack("<I", len(horizons)))
        for k in horizons:
            fh.write(struct.pack("<I", k))
        for k in horizons:
            fh.write(np.ascontiguousarray(day.labels[k], dtype=np.int8).tobytes())


def read_day(path, day_id=None) -> SeriesDay:
    path = Path(path)
    data = path.read_bytes()
    if len(data) < _HEADER.size:
        raise DataFormatError(f"{path}: truncated header")
    magic, version, n_events, n_features = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise DataFormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise DataFormatError(f"{path}: unsupported version {version}")
    offset = _HEADER.size
    feat_bytes = n_events * n_features * 4
    if len(data) < offset + feat_bytes + 4:
        raise DataFormatError(f"{path}: truncated feature block")
    feats = np.frombuffer(data, dtype="<f4", count=n_events * n_features, offset=offset)
    feats = feats.reshape(n_events, n_features).copy()
    offset += feat_bytes
    (n_horizons,) = struct.unpack_from("<I", data, offset)
    offset += 4
    if len(data) < offset + 4 * n_horizons + n_horizons * n_events:
        raise DataFormatError(f"{path}: truncated label block")
    horizons = struct.unpack_from(f"<{n_horizons}I", data, offset) if n_horizons else ()
    offset += 4 * n_horizons
    labels = {}
    for k in horizons:
        labels[k] = np.frombuffer(data, dtype=np.int8, count=n_events, offset=offset).copy()
        offset += n_events
    if day_id is None:
        day_id = path.stem
    return SeriesDay(day_id, feats, labels=labels)


def write_days(directory, days: list[SeriesDay]) -> list[Path]:
    """Write one LOB1 file per day, named day_<nnn>_<id>.lob."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, day in enumerate(days):
        path = directory / f"day_{i:03d}_{day.day_id}.lob"
        write_day(path, day)
        paths.append(path)
    return paths


def read_days(directory) -> list[SeriesDay]:
    directory = Path(directory)
    paths = sorted(directory.glob("*.lob"))
    if not paths:
        raise DataFormatError(f"no .lob day files found in {directory}")
    return [read_day(p) for p in paths]
