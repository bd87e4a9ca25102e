"""JSONL corpus files: one {"id": ..., "text": ...} record per line."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path


@dataclass
class Record:
    id: str
    text: str


def read_jsonl(path) -> list[Record]:
    records = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            doc = json.loads(line)
            if "id" not in doc or "text" not in doc:
                raise ValueError(f"{path}:{lineno}: record needs 'id' and 'text'")
            records.append(Record(id=str(doc["id"]), text=str(doc["text"])))
    if not records:
        raise ValueError(f"{path}: empty corpus")
    return records


def write_jsonl(records, path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps({"id": rec.id, "text": rec.text}) + "\n")
