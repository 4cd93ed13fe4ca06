"""Binary checkpoint format for named float64 tensors.

Layout (little-endian): magic ``GDDQ``, u32 format version, u64 tensor count,
then per tensor: u64 name length, UTF-8 name, u64 rank, rank x u64 dims,
float64 values in C order.
"""

from __future__ import annotations

import os
import struct
from pathlib import Path

import numpy as np

from .params import ParamSet

MAGIC = b"GDDQ"
FORMAT_VERSION = 1
_VERSION_KEY = ".version"


class CheckpointError(ValueError):
    pass


def encode_tensors(tensors: dict[str, np.ndarray]) -> bytes:
    parts = [MAGIC, struct.pack("<IQ", FORMAT_VERSION, len(tensors))]
    for name, arr in tensors.items():
        arr = np.asarray(arr, dtype="<f8")  # ascontiguousarray would promote 0-d to 1-d
        raw = name.encode("utf-8")
        parts.append(struct.pack("<Q", len(raw)) + raw)
        parts.append(struct.pack("<Q", arr.ndim) + struct.pack(f"<{arr.ndim}Q", *arr.shape))
        parts.append(arr.tobytes(order="C"))
    return b"".join(parts)


def decode_tensors(blob: bytes) -> dict[str, np.ndarray]:
    """Parse the whole blob before returning anything (no partial loads)."""
    if blob[:4] != MAGIC:
        raise CheckpointError("bad magic: not a checkpoint file")
    pos = 4

    def take(n: int) -> bytes:
        nonlocal pos
        if pos + n > len(blob):
            raise CheckpointError(f"truncated checkpoint: need {n} bytes at offset {pos}, have {len(blob) - pos}")
        out = blob[pos : pos + n]
        pos += n
        return out

    version, count = struct.unpack("<IQ", take(12))
    if version != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    out: dict[str, np.ndarray] = {}
    for _ in range(count):
        (n,) = struct.unpack("<Q", take(8))
        name = take(n).decode("utf-8")
        (rank,) = struct.unpack("<Q", take(8))
        dims = struct.unpack(f"<{rank}Q", take(8 * rank))
        size = int(np.prod(dims, dtype=np.int64)) if rank else 1
        out[name] = np.frombuffer(take(8 * size), dtype="<f8").reshape(dims).astype(np.float64)
    if pos != len(blob):
        raise CheckpointError(f"{len(blob) - pos} trailing bytes after the last tensor")
    return out


def save_tensors(path: str | Path, tensors: dict[str, np.ndarray]) -> None:
    """Write atomically via a temporary sibling file."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(encode_tensors(tensors))
    os.replace(tmp, path)


def load_tensors(path: str | Path) -> dict[str, np.ndarray]:
    with open(path, "rb") as fh:
        return decode_tensors(fh.read())


def pack_params(groups: dict[str, ParamSet]) -> dict[str, np.ndarray]:
    flat: dict[str, np.ndarray] = {}
    for group, ps in groups.items():
        for name, arr in ps.arrays().items():
            flat[f"{group}/{name}"] = arr
        flat[f"{group}/{_VERSION_KEY}"] = np.array(float(ps.version))
    return flat


def unpack_params(flat: dict[str, np.ndarray]) -> dict[str, ParamSet]:
    grouped: dict[str, dict[str, np.ndarray]] = {}
    for key, arr in flat.items():
        group, _, name = key.partition("/")
        grouped.setdefault(group, {})[name] = arr
    out = {}
    for group, arrays in grouped.items():
        version = int(arrays.pop(_VERSION_KEY, np.array(0.0)))
        out[group] = ParamSet(arrays, version=version)
    return out


def save_params(path: str | Path, groups: dict[str, ParamSet]) -> None:
    save_tensors(path, pack_params(groups))


def load_params(path: str | Path) -> dict[str, ParamSet]:
    return unpack_params(load_tensors(path))
