"""JSONL readers and writers for the on-disk record formats."""

from __future__ import annotations

import json
from typing import Any, Iterable, Iterator

from .core import CompressionTrajectory, Question


def write_jsonl(path, records: Iterable[Any]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            d = rec.to_dict() if hasattr(rec, "to_dict") else rec
            fh.write(json.dumps(d, ensure_ascii=False, sort_keys=True) + "\n")
            n += 1
    return n


def read_jsonl(path) -> Iterator[dict]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as e:
                raise ValueError(f"{path}:{lineno}: invalid JSON: {e}") from e


def load_questions(path) -> list[Question]:
    qs = [Question.from_dict(d) for d in read_jsonl(path)]
    seen = set()
    for q in qs:
        if q.id in seen:
            raise ValueError(f"duplicate question id {q.id!r} in {path}")
        seen.add(q.id)
    return qs


def load_trajectories(path) -> list[CompressionTrajectory]:
    return [CompressionTrajectory.from_dict(d) for d in read_jsonl(path)]
