"""Versioned binary checkpoints.

Layout: magic ``LOBC``, version u32, header length u64, a canonical JSON
header (sorted keys), then one raw little-endian buffer per tensor. The
header records name/dtype/shape/offset for every parameter and optimizer
tensor plus the RNG state, so a run can resume exactly. Writing the same
state twice produces identical bytes.

Loading never converts precision silently: ask for a dtype and set
``allow_cast=True`` to get an explicit conversion.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CorruptCheckpointError, ValidationError
from .nn import AdamState

MAGIC = b"LOBC"
VERSION = 1
_PREFIX = struct.Struct("<4sIQ")


@dataclass
class Checkpoint:
    params: dict[str, np.ndarray]
    adam: AdamState | None = None
    rng_state: dict | None = None
    meta: dict | None = None


def _tensor_entries(tensors: dict[str, np.ndarray], offset: int):
    entries = []
    buffers = []
    for name in tensors:
        arr = np.ascontiguousarray(tensors[name])
        if arr.dtype.byteorder == ">":
            arr = arr.astype(arr.dtype.newbyteorder("<"))
        raw = arr.tobytes()
        entries.append(
            {
                "name": name,
                "dtype": arr.dtype.str.lstrip("<=|>"),
                "shape": list(arr.shape),
                "offset": offset,
                "nbytes": len(raw),
            }
        )
        buffers.append(raw)
        offset += len(raw)
    return entries, buffers, offset


def save_checkpoint(path, ckpt: Checkpoint) -> None:
    offset = 0
    param_entries, param_bufs, offset = _tensor_entries(ckpt.params, offset)
    header: dict = {"params": param_entries, "adam": None, "rng_state": ckpt.rng_state,
                    "meta": ckpt.meta or {}}
    opt_bufs: list[bytes] = []
    if ckpt.adam is not None:
        m_entries, m_bufs, offset = _tensor_entries(
            {f"m.{k}": v for k, v in ckpt.adam.m.items()}, offset
        )
        v_entries, v_bufs, offset = _tensor_entries(
            {f"v.{k}": v for k, v in ckpt.adam.v.items()}, offset
        )
        header["adam"] = {"step": ckpt.adam.step, "tensors": m_entries + v_entries}
        opt_bufs = m_bufs + v_bufs
    head = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    with open(path, "wb") as fh:
        fh.write(_PREFIX.pack(MAGIC, VERSION, len(head)))
        fh.write(head)
        for buf in param_bufs + opt_bufs:
            fh.write(buf)


def _read_tensor(blob: bytes, entry: dict) -> np.ndarray:
    start, n = entry["offset"], entry["nbytes"]
    if start + n > len(blob):
        raise CorruptCheckpointError(f"tensor {entry['name']!r} extends past end of file")
    arr = np.frombuffer(blob[start : start + n], dtype=np.dtype("<" + entry["dtype"]))
    return arr.reshape(entry["shape"]).copy()


def load_checkpoint(path, dtype=None, allow_cast: bool = False) -> Checkpoint:
    path = Path(path)
    data = path.read_bytes()
    if len(data) < _PREFIX.size:
        raise CorruptCheckpointError(f"{path}: shorter than the fixed prefix")
    magic, version, head_len = _PREFIX.unpack_from(data, 0)
    if magic != MAGIC:
        raise CorruptCheckpointError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise CorruptCheckpointError(f"{path}: unsupported version {version}")
    if len(data) < _PREFIX.size + head_len:
        raise CorruptCheckpointError(f"{path}: truncated header")
    try:
        header = json.loads(data[_PREFIX.size : _PREFIX.size + head_len])
    except json.JSONDecodeError as exc:
        raise CorruptCheckpointError(f"{path}: unreadable header ({exc})") from exc
    blob = data[_PREFIX.size + head_len :]

    want = np.dtype(dtype) if dtype is not None else None

    def maybe_cast(name: str, arr: np.ndarray) -> np.ndarray:
        if want is None or arr.dtype == want:
            return arr
        if not allow_cast:
            raise ValidationError(
                f"tensor {name!r} stored as {arr.dtype}, requested {want}; "
                "pass allow_cast=True for an explicit conversion"
            )
        return arr.astype(want)

    params = {e["name"]: maybe_cast(e["name"], _read_tensor(blob, e)) for e in header["params"]}
    adam = None
    if header.get("adam"):
        tensors = {e["name"]: _read_tensor(blob, e) for e in header["adam"]["tensors"]}
        adam = AdamState(
            m={k[2:]: maybe_cast(k, v) for k, v in tensors.items() if k.startswith("m.")},
            v={k[2:]: maybe_cast(k, v) for k, v in tensors.items() if k.startswith("v.")},
            step=int(header["adam"]["step"]),
        )
    return Checkpoint(params=params, adam=adam, rng_state=header.get("rng_state"),
                      meta=header.get("meta") or {})
