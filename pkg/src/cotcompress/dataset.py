"""Multi-task fine-tuning records mixing compressed and original chains."""

from __future__ import annotations

import math
import random
from dataclasses import asdict, dataclass, field
from typing import Iterable

from .core import CompressionTrajectory, TrainingRecord, validate_trajectory


@dataclass(frozen=True)
class DatasetConfig:
    eos_literal: str = "<|eot|>"
    control_literal: str = "<compress>"
    original_fraction: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.original_fraction <= 1.0:
            raise ValueError("original_fraction must be in [0, 1]")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


def render_prompt(q_text: str, compressed: bool, cfg: DatasetConfig = DatasetConfig()) -> str:
    if compressed:
        return f"{q_text}{cfg.eos_literal}{cfg.control_literal}{cfg.eos_literal}"
    return f"{q_text}{cfg.eos_literal}"


def render_training_record(
    q_text: str, target_text: str, compressed: bool, cfg: DatasetConfig = DatasetConfig()
) -> str:
    if not q_text or not target_text:
        raise ValueError("question and target text must be non-empty")
    return render_prompt(q_text, compressed, cfg) + target_text


def parse_training_record(rendered: str, cfg: DatasetConfig = DatasetConfig()) -> TrainingRecord:
    """Inverse of :func:`render_training_record` (the question must not contain the EOS literal)."""
    q_text, sep, rest = rendered.partition(cfg.eos_literal)
    if not sep:
        raise ValueError("rendered record has no EOS separator")
    marker = cfg.control_literal + cfg.eos_literal
    compressed = rest.startswith(marker)
    target = rest[len(marker):] if compressed else rest
    return TrainingRecord(
        question_text=q_text,
        compressed=compressed,
        target_text=target,
        rendered=rendered,
        prompt=render_prompt(q_text, compressed, cfg),
    )


def make_record(qid: str, q_text: str, target: str, compressed: bool, cfg: DatasetConfig) -> TrainingRecord:
    return TrainingRecord(
        question_text=q_text,
        compressed=compressed,
        target_text=target,
        rendered=render_training_record(q_text, target, compressed, cfg),
        prompt=render_prompt(q_text, compressed, cfg),
        question_id=qid,
    )


@dataclass
class BuildReport:
    n_trajectories: int = 0
    n_compressed: int = 0
    n_original: int = 0
    skipped: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def build_dataset(
    trajectories: Iterable[CompressionTrajectory], cfg: DatasetConfig = DatasetConfig()
) -> tuple[list[TrainingRecord], BuildReport]:
    report = BuildReport()
    usable: list[CompressionTrajectory] = []
    for t in sorted(trajectories, key=lambda t: t.question.id):
        report.n_trajectories += 1
        if t.selected is None:
            report.skipped.append({"id": t.question.id, "reason": "no selected chain"})
            continue
        problems = validate_trajectory(t)
        if problems:
            report.skipped.append({"id": t.question.id, "reason": "; ".join(problems)})
            continue
        usable.append(t)

    # rounding guards against 0.7 * 10 -> 7.000000000000001
    n_orig = math.ceil(round(cfg.original_fraction * len(usable), 9))
    rng = random.Random(cfg.seed)
    with_original = set(rng.sample([t.question.id for t in usable], n_orig))

    records = []
    for t in usable:
        q = t.question
        records.append(make_record(q.id, q.text, t.selected.text, True, cfg))
        if q.id in with_original:
            records.append(make_record(q.id, q.text, t.rounds[0].text, False, cfg))
    report.n_compressed = len(usable)
    report.n_original = n_orig
    return records, report

