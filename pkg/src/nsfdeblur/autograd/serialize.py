"""Binary tensor and checkpoint files.

Tensor record (all integers little-endian):
    magic  b"NSFD"
    u32    format version (currently 1)
    u32    ndim
    u64[]  extents, one per dimension
    f32[]  payload, row-major

Checkpoint: u32 entry count, then per entry a u32 name length, the UTF-8
name bytes, and a full tensor record. Round-trips are bit-identical.
"""

from __future__ import annotations

import struct
from typing import BinaryIO, Mapping

import numpy as np

from ..errors import DataError
from .tensor import Tensor

MAGIC = b"NSFD"
VERSION = 1
_MAX_NDIM = 16


def _coerce(arr) -> np.ndarray:
    if isinstance(arr, Tensor):
        arr = arr.data
    arr = np.asarray(arr, dtype="<f4")
    # ascontiguousarray would promote 0-d scalars to 1-d; keep their rank
    return arr if arr.flags.c_contiguous else np.ascontiguousarray(arr)


def write_tensor_record(f: BinaryIO, arr) -> None:
    arr = _coerce(arr)
    f.write(MAGIC)
    f.write(struct.pack("<II", VERSION, arr.ndim))
    f.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
    f.write(arr.tobytes(order="C"))


def _read_exact(f: BinaryIO, n: int, what: str) -> bytes:
    data = f.read(n)
    if len(data) != n:
        raise DataError(f"truncated tensor record while reading {what}")
    return data


def read_tensor_record(f: BinaryIO) -> np.ndarray:
    magic = _read_exact(f, 4, "magic")
    if magic != MAGIC:
        raise DataError(f"bad magic {magic!r}, expected {MAGIC!r}")
    version, ndim = struct.unpack("<II", _read_exact(f, 8, "header"))
    if version != VERSION:
        raise DataError(f"unsupported tensor format version {version}")
    if ndim > _MAX_NDIM:
        raise DataError(f"implausible ndim {ndim}")
    shape = struct.unpack(f"<{ndim}Q", _read_exact(f, 8 * ndim, "extents"))
    count = int(np.prod(shape, dtype=np.int64)) if ndim else 1
    payload = _read_exact(f, 4 * count, "payload")
    return np.frombuffer(payload, dtype="<f4").reshape(shape).copy()


def save_tensor(path, arr) -> None:
    with open(path, "wb") as f:
        write_tensor_record(f, arr)


def load_tensor(path) -> np.ndarray:
    try:
        with open(path, "rb") as f:
            arr = read_tensor_record(f)
            if f.read(1):
                raise DataError(f"trailing bytes after tensor record in {path}")
            return arr
    except OSError as e:
        raise DataError(f"cannot read tensor file {path}: {e}") from e


def save_checkpoint(path, entries: Mapping[str, np.ndarray]) -> None:
    with open(path, "wb") as f:
        f.write(struct.pack("<I", len(entries)))
        for name, arr in entries.items():
            nb = name.encode("utf-8")
            f.write(struct.pack("<I", len(nb)))
            f.write(nb)
            write_tensor_record(f, arr)


def load_checkpoint(path) -> dict[str, np.ndarray]:
    try:
        with open(path, "rb") as f:
            (count,) = struct.unpack("<I", _read_exact(f, 4, "entry count"))
            out: dict[str, np.ndarray] = {}
            for _ in range(count):
                (nlen,) = struct.unpack("<I", _read_exact(f, 4, "name length"))
                name = _read_exact(f, nlen, "name").decode("utf-8")
                if name in out:
                    raise DataError(f"duplicate checkpoint entry {name!r} in {path}")
                out[name] = read_tensor_record(f)
            if f.read(1):
                raise DataError(f"trailing bytes after checkpoint entries in {path}")
            return out
    except OSError as e:
        raise DataError(f"cannot read checkpoint {path}: {e}") from e
