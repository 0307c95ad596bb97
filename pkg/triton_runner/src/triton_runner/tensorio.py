"""Reader for the TWT1 tensor file format.

Layout: magic ``TWT1``, uint32 rank, ``rank`` uint32 sizes, then float32
row-major data — all little-endian. Files ending in ``.json`` use the
alternative ``{"shape": [...], "data": [...]}`` encoding.
"""

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"TWT1"


class TensorIOError(Exception):
    """A tensor file is missing, truncated, or malformed."""


def read_tensor(path) -> np.ndarray:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise TensorIOError(f"cannot read {path}: {exc}") from exc
    if path.suffix == ".json":
        return _read_json(path, raw)
    if len(raw) < 8 or raw[:4] != MAGIC:
        raise TensorIOError(f"{path}: not a TWT1 tensor file")
    (rank,) = struct.unpack_from("<I", raw, 4)
    header_end = 8 + 4 * rank
    if len(raw) < header_end:
        raise TensorIOError(f"{path}: truncated header")
    shape = struct.unpack_from(f"<{rank}I", raw, 8)
    count = 1
    for s in shape:
        count *= s
    expected = header_end + 4 * count
    if len(raw) != expected:
        raise TensorIOError(
            f"{path}: expected {expected} bytes for shape {tuple(shape)}, got {len(raw)}"
        )
    data = np.frombuffer(raw, dtype="<f4", offset=header_end, count=count)
    return data.reshape(shape).astype(np.float32)


def _read_json(path: Path, raw: bytes) -> np.ndarray:
    try:
        doc = json.loads(raw)
        shape = tuple(int(s) for s in doc["shape"])
        arr = np.asarray(doc["data"], dtype=np.float32).reshape(shape)
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise TensorIOError(f"{path}: malformed JSON tensor: {exc}") from exc
    return arr
