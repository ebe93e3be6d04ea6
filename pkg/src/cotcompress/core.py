"""Shared domain types for the compression pipeline.

All types are immutable and serialize to plain JSON objects whose keys match
the dataclass field names. Nothing in this module touches the filesystem.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

STOP_MAX_ROUNDS = "max_rounds"
STOP_LENGTH_REBOUND = "length_rebound"
STOP_ERROR = "error"
STOP_REASONS = (STOP_MAX_ROUNDS, STOP_LENGTH_REBOUND, STOP_ERROR)


@dataclass(frozen=True)
class Question:
    id: str
    text: str
    gold_answer: Optional[str] = None

    def __post_init__(self):
        if not self.text:
            raise ValueError(f"question {self.id!r} has empty text")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> Question:
        return cls(id=str(d["id"]), text=d["text"], gold_answer=d.get("gold_answer"))


@dataclass(frozen=True)
class ReasoningTrace:
    text: str
    token_count: int
    answer: Optional[str] = None
    answer_normalized: Optional[str] = None
    logprobs: Optional[tuple[float, ...]] = None
    latency_s: Optional[float] = None

    def __post_init__(self):
        if self.token_count < 0:
            raise ValueError("token_count must be non-negative")
        if self.latency_s is not None and self.latency_s < 0:
            raise ValueError("latency_s must be non-negative")
        if self.logprobs is not None:
            lp = tuple(float(x) for x in self.logprobs)
            if any(x > 0 for x in lp):
                raise ValueError("logprobs must all be <= 0")
            object.__setattr__(self, "logprobs", lp)

    def to_dict(self) -> dict:
        d = asdict(self)
        if self.logprobs is not None:
            d["logprobs"] = list(self.logprobs)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> ReasoningTrace:
        lp = d.get("logprobs")
        return cls(
            text=d["text"],
            token_count=int(d["token_count"]),
            answer=d.get("answer"),
            answer_normalized=d.get("answer_normalized"),
            logprobs=tuple(lp) if lp is not None else None,
            latency_s=d.get("latency_s"),
        )


@dataclass(frozen=True)
class CompressionTrajectory:
    """Rounds r_0..r_N for one question.

    ``rounds`` may end with a rebound round that is kept for auditing but is
    not selectable. ``selected_index`` is None until compression has run.
    """

    question: Question
    rounds: tuple[ReasoningTrace, ...]
    rates: tuple[float, ...]
    selected_index: Optional[int] = None
    stopped_reason: Optional[str] = None
    error: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "rounds", tuple(self.rounds))
        object.__setattr__(self, "rates", tuple(float(r) for r in self.rates))

    @property
    def selected(self) -> Optional[ReasoningTrace]:
        if self.selected_index is None or self.selected_index >= len(self.rounds):
            return None
        return self.rounds[self.selected_index]

    @property
    def usable(self) -> int:
        """Number of leading rounds eligible for selection."""
        if self.stopped_reason == STOP_LENGTH_REBOUND:
            return len(self.rounds) - 1
        return len(self.rounds)

    def to_dict(self) -> dict:
        return {
            "question": self.question.to_dict(),
            "rounds": [r.to_dict() for r in self.rounds],
            "rates": list(self.rates),
            "selected_index": self.selected_index,
            "stopped_reason": self.stopped_reason,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, d: dict) -> CompressionTrajectory:
        return cls(
            question=Question.from_dict(d["question"]),
            rounds=tuple(ReasoningTrace.from_dict(r) for r in d["rounds"]),
            rates=tuple(d["rates"]),
            selected_index=d.get("selected_index"),
            stopped_reason=d.get("stopped_reason"),
            error=d.get("error"),
        )


@dataclass(frozen=True)
class TrainingRecord:
    question_text: str
    compressed: bool
    target_text: str
    rendered: str
    prompt: str = ""
    question_id: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "question_id": self.question_id,
            "question": self.question_text,
            "compressed": self.compressed,
            "rendered": self.rendered,
            "prompt": self.prompt,
            "completion": self.target_text,
        }

    @classmethod
    def from_dict(cls, d: dict) -> TrainingRecord:
        return cls(
            question_text=d["question"],
            compressed=bool(d["compressed"]),
            target_text=d["completion"],
            rendered=d["rendered"],
            prompt=d.get("prompt", ""),
            question_id=d.get("question_id"),
        )


FEATURE_NAMES = (
    "compression_rate",
    "compressed_ppl",
    "original_len",
    "original_acc",
    "compressor_acc",
)
TARGET_NAMES = ("target_acc", "target_len")


@dataclass(frozen=True)
class FeatureRow:
    compression_rate: float
    compressed_ppl: float
    original_len: float
    original_acc: float
    compressor_acc: float
    target_acc: Optional[float] = None
    target_len: Optional[float] = None
    label: str = field(default="", compare=False)

    def __post_init__(self):
        for f in fields(self):
            if f.name == "label":
                continue
            v = getattr(self, f.name)
            if v is None:
                continue
            if not math.isfinite(v):
                raise ValueError(f"{f.name} is not finite: {v}")
        for name in ("original_acc", "compressor_acc", "target_acc"):
            v = getattr(self, name)
            if v is not None and not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be a fraction in [0, 1], got {v}")

    def features(self) -> list[float]:
        return [getattr(self, n) for n in FEATURE_NAMES]

    def targets(self) -> list[float]:
        return [getattr(self, n) for n in TARGET_NAMES]

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> FeatureRow:
        return cls(**{f.name: d[f.name] for f in fields(cls) if f.name in d})


def validate_trajectory(t: CompressionTrajectory) -> list[str]:
    """Return every violated trajectory invariant; an empty list means ok."""
    problems = []
    if not t.rounds:
        return ["no rounds"]
    base = t.rounds[0].token_count
    if base <= 0:
        problems.append("round 0 has zero tokens")
    if len(t.rates) != len(t.rounds):
        problems.append(f"rate count {len(t.rates)} != round count {len(t.rounds)}")
    elif base > 0:
        for i, (r, rate) in enumerate(zip(t.rounds, t.rates)):
            if rate != r.token_count / base:
                problems.append(f"rate mismatch at round {i}: {rate} != {r.token_count}/{base}")
    if t.stopped_reason is not None and t.stopped_reason not in STOP_REASONS:
        problems.append(f"unknown stopped_reason {t.stopped_reason!r}")
    k = t.selected_index
    if k is None:
        if t.stopped_reason is not None:
            problems.append("selection missing")
        return problems
    if not 0 <= k < len(t.rounds):
        problems.append(f"index out of range: {k} with {len(t.rounds)} rounds")
        return problems
    if k >= t.usable:
        problems.append(f"selected round {k} is not usable")
    if t.rounds[k].token_count > base:
        problems.append("selected round longer than round 0")
    for j in range(1, k + 1):
        if t.rounds[j].token_count > t.rounds[j - 1].token_count:
            problems.append(f"length increases at round {j} before selection")
    return problems
