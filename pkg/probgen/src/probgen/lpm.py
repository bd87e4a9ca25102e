"""Writer (and reader, for validation) of the LPM1 binary matrix format.

Layout: 4-byte ASCII magic "LPM1", u32 little-endian n_docs, u32
little-endian n_texts, then n_docs * n_texts float64 little-endian values
row-major.  This is the hand-off format consumed by the clustering
toolkit.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"LPM1"
_HEADER = struct.Struct("<4sII")


def write_lpm(values: np.ndarray, path) -> None:
    values = np.ascontiguousarray(values, dtype="<f8")
    if values.ndim != 2:
        raise ValueError("matrix must be 2-D")
    n, j = values.shape
    with Path(path).open("wb") as fh:
        fh.write(_HEADER.pack(MAGIC, n, j))
        fh.write(values.tobytes())


def read_lpm(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    magic, n, j = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    payload = raw[_HEADER.size:]
    if len(payload) != n * j * 8:
        raise ValueError(f"{path}: payload size mismatch")
    return np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(n, j)
