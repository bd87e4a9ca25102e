"""Readers and writers for the LPM1 binary matrix format and CSV ingestion.

LPM1 layout: 4-byte ASCII magic "LPM1", u32 little-endian n_docs, u32
little-endian n_texts, then n_docs * n_texts float64 little-endian values
in row-major order.  Optional sidecar files ``docs.jsonl`` / ``texts.jsonl``
next to the matrix supply ids aligned by position.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Optional

import numpy as np

from .core import LogProbMatrix
from .errors import DimensionMismatchError, MatrixFormatError

MAGIC = b"LPM1"
_HEADER = struct.Struct("<4sII")


def _read_sidecar_ids(path: Path, expected: int, name: str) -> Optional[list[str]]:
    sidecar = path.parent / name
    if not sidecar.exists():
        return None
    ids = []
    with sidecar.open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            ids.append(str(json.loads(line)["id"]))
    if len(ids) != expected:
        raise DimensionMismatchError(
            f"sidecar {name} has {len(ids)} entries, matrix expects {expected}"
        )
    return ids


def load_matrix(path, format: str = "binary") -> LogProbMatrix:
    """Load a log-probability matrix; invariants (finite, <= 0) are enforced."""
    path = Path(path)
    if format == "binary":
        mat = _load_binary(path)
    elif format == "csv":
        mat = _load_csv(path)
    else:
        raise MatrixFormatError(f"unknown format {format!r}")
    doc_ids = _read_sidecar_ids(path, mat.n_docs, "docs.jsonl")
    text_ids = _read_sidecar_ids(path, mat.n_texts, "texts.jsonl")
    if doc_ids is not None:
        mat.doc_ids = doc_ids
    if text_ids is not None:
        mat.text_ids = text_ids
    mat.validate_log_probs()
    return mat


def _load_binary(path: Path) -> LogProbMatrix:
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise MatrixFormatError(f"{path}: file shorter than the LPM1 header")
    magic, n_docs, n_texts = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise MatrixFormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if n_docs < 1 or n_texts < 1:
        raise MatrixFormatError(f"{path}: header declares {n_docs}x{n_texts} matrix")
    payload = raw[_HEADER.size:]
    expected = n_docs * n_texts * 8
    if len(payload) != expected:
        raise DimensionMismatchError(
            f"{path}: header declares {n_docs}x{n_texts} "
            f"({expected} payload bytes) but file carries {len(payload)}"
        )
    values = np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(n_docs, n_texts)
    return LogProbMatrix.from_array(values)


def _load_csv(path: Path) -> LogProbMatrix:
    rows = []
    width = None
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = [float(tok) for tok in line.split(",")]
            except ValueError as exc:
                raise MatrixFormatError(f"{path}:{lineno}: unparseable value ({exc})")
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise DimensionMismatchError(
                    f"{path}:{lineno}: row has {len(row)} values, expected {width}"
                )
            rows.append(row)
    if not rows:
        raise MatrixFormatError(f"{path}: empty CSV")
    return LogProbMatrix.from_array(np.array(rows, dtype=np.float64))


def store_matrix(mat: LogProbMatrix, path) -> None:
    """Write LPM1; load + store round-trips canonical files byte-identically."""
    path = Path(path)
    values = np.ascontiguousarray(mat.values, dtype="<f8")
    with path.open("wb") as fh:
        fh.write(_HEADER.pack(MAGIC, mat.n_docs, mat.n_texts))
        fh.write(values.tobytes())


def write_sidecars(path, doc_ids, text_ids, doc_texts=None, text_texts=None) -> None:
    """Write docs.jsonl / texts.jsonl next to a matrix file."""
    path = Path(path)
    with (path.parent / "docs.jsonl").open("w", encoding="utf-8") as fh:
        for i, did in enumerate(doc_ids):
            rec = {"id": did, "text": doc_texts[i] if doc_texts else ""}
            fh.write(json.dumps(rec) + "\n")
    with (path.parent / "texts.jsonl").open("w", encoding="utf-8") as fh:
        for j, tid in enumerate(text_ids):
            rec = {"id": tid, "text": text_texts[j] if text_texts else ""}
            fh.write(json.dumps(rec) + "\n")
