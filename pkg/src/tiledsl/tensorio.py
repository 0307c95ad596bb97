"""Flat tensor file formats for the CLI.

Binary: magic ``TWT1``, u32 rank, u32 per-dim sizes, then the float32
little-endian row-major payload.  A ``.json`` path selects the
human-readable alternative (``{"shape": [...], "data": [...]}``) intended
for tiny tensors.
"""

from __future__ import annotations

import json
import math
import struct
from pathlib import Path

import numpy as np

MAGIC = b"TWT1"


class TensorIOError(Exception):
    pass


def write_tensor(path, arr: np.ndarray) -> None:
    path = Path(path)
    arr = np.ascontiguousarray(arr, dtype=np.float32)
    if path.suffix == ".json":
        doc = {"shape": list(arr.shape), "data": [float(x) for x in arr.reshape(-1)]}
        path.write_text(json.dumps(doc) + "\n")
        return
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", arr.ndim))
        f.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        f.write(arr.astype("<f4").tobytes(order="C"))


def read_tensor(path) -> np.ndarray:
    path = Path(path)
    if path.suffix == ".json":
        try:
            doc = json.loads(path.read_text())
            shape = tuple(int(s) for s in doc["shape"])
            data = np.asarray(doc["data"], dtype=np.float32)
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise TensorIOError(f"{path}: bad JSON tensor ({exc})") from None
        if data.size != math.prod(shape):
            raise TensorIOError(
                f"{path}: {data.size} values for shape {shape}"
            )
        return data.reshape(shape)
    raw = path.read_bytes()
    if raw[:4] != MAGIC:
        raise TensorIOError(f"{path}: bad magic {raw[:4]!r}")
    if len(raw) < 8:
        raise TensorIOError(f"{path}: truncated header")
    (rank,) = struct.unpack_from("<I", raw, 4)
    header_end = 8 + 4 * rank
    if len(raw) < header_end:
        raise TensorIOError(f"{path}: truncated size list")
    shape = struct.unpack_from(f"<{rank}I", raw, 8)
    count = math.prod(shape) if rank else 1
    payload = raw[header_end:]
    if len(payload) != 4 * count:
        raise TensorIOError(
            f"{path}: payload holds {len(payload) // 4} floats, expected {count}"
        )
    return np.frombuffer(payload, dtype="<f4").reshape(shape).copy()
