"""Multi-round progressive compression with a length-rebound stopping rule."""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass
from typing import Optional, Sequence

from .core import (
    STOP_ERROR,
    STOP_LENGTH_REBOUND,
    STOP_MAX_ROUNDS,
    CompressionTrajectory,
    Question,
    ReasoningTrace,
)
from .gateway import Completion, Gateway, GatewayError, ModelEndpoint
from .metrics import DEFAULT_SCHEME, SCHEME_ENDPOINT, count_tokens, extract_boxed_answer, normalize_answer
from .prompts import render_compression_prompt, render_generation_prompt

logger = logging.getLogger(__name__)

DEFAULT_MAX_ROUNDS = 5
DEFAULT_THINK_DELIMITER = "</think>"


class CompressionError(RuntimeError):
    def __init__(self, message: str, round_index: Optional[int] = None):
        self.round_index = round_index
        super().__init__(message if round_index is None else f"round {round_index}: {message}")


@dataclass(frozen=True)
class CompressionConfig:
    max_rounds: int = DEFAULT_MAX_ROUNDS
    think_delimiter: Optional[str] = None
    token_scheme: str = DEFAULT_SCHEME

    def __post_init__(self):
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be >= 1")

    @classmethod
    def from_dict(cls, d: dict) -> CompressionConfig:
        d = dict(d)
        if d.pop("reasoning_model", False) and not d.get("think_delimiter"):
            d["think_delimiter"] = DEFAULT_THINK_DELIMITER
        return cls(**d)


def compression_rate(len_i: int, len_0: int) -> float:
    if len_0 <= 0:
        raise ValueError("round-0 token count must be positive")
    return len_i / len_0


def split_reasoning_answer(text: str, delimiter: str) -> tuple[str, str]:
    head, sep, tail = text.partition(delimiter)
    if not sep:
        return text, ""
    return head, tail


def make_trace(text: str, scheme: str, completion: Optional[Completion] = None, fallback_answer=None) -> ReasoningTrace:
    answer = extract_boxed_answer(text)
    if answer is None:
        answer = fallback_answer
    reported = completion.token_count_reported if completion is not None else None
    return ReasoningTrace(
        text=text,
        token_count=count_tokens(text, scheme, reported),
        answer=answer,
        answer_normalized=normalize_answer(answer),
        logprobs=completion.logprobs if completion is not None else None,
        latency_s=completion.latency_s if completion is not None else None,
    )


def generate_initial(gateway: Gateway, endpoint: ModelEndpoint, q: Question, scheme: str = DEFAULT_SCHEME) -> ReasoningTrace:
    c = gateway.complete(endpoint, render_generation_prompt(q))
    return make_trace(c.text.strip(), scheme, c)


def _compress_text(gateway, endpoint, q, text, answer) -> Completion:
    c = gateway.complete(endpoint, render_compression_prompt(q, text, answer or ""))
    return Completion(c.text.strip(), c.latency_s, c.logprobs, c.token_count_reported)


def compress_round(
    gateway: Gateway,
    endpoint: ModelEndpoint,
    q: Question,
    prev: ReasoningTrace,
    cfg: CompressionConfig = CompressionConfig(),
    round_index: Optional[int] = None,
) -> ReasoningTrace:
    """One application of the compressor to the previous round's chain."""
    if not prev.text:
        raise CompressionError("previous chain of thought is empty", round_index)
    try:
        if cfg.think_delimiter:
            reasoning, answer_part = split_reasoning_answer(prev.text, cfg.think_delimiter)
            parts = []
            latency = 0.0
            for part in (reasoning, answer_part):
                if part.strip():
                    c = _compress_text(gateway, endpoint, q, part, prev.answer)
                    parts.append(c.text)
                    latency += c.latency_s
                else:
                    parts.append(part)
            if cfg.think_delimiter in prev.text:
                text = parts[0] + cfg.think_delimiter + parts[1]
            else:
                text = parts[0]
            completion = Completion(text, latency)
        else:
            completion = _compress_text(gateway, endpoint, q, prev.text, prev.answer)
    except GatewayError as e:
        raise CompressionError(str(e), round_index) from e
    scheme = cfg.token_scheme
    if scheme == SCHEME_ENDPOINT and completion.token_count_reported is None:
        raise CompressionError("endpoint did not report a token count", round_index)
    return make_trace(completion.text, scheme, completion, fallback_answer=prev.answer)


def select_final(lengths: Sequence[int], usable: int) -> int:
    """Index of r*: the last round of the non-increasing prefix within ``usable``."""
    if not lengths:
        raise ValueError("no rounds to select from")
    if usable < 1:
        raise ValueError("usable must be >= 1")
    limit = min(usable, len(lengths))
    j = 0
    while j + 1 < limit and lengths[j + 1] <= lengths[j]:
        j += 1
    return j


def run_trajectory(
    gateway: Gateway,
    endpoint: ModelEndpoint,
    q: Question,
    r0: ReasoningTrace,
    cfg: CompressionConfig = CompressionConfig(),
) -> CompressionTrajectory:
    if r0.token_count <= 0:
        raise ValueError(f"question {q.id}: round-0 chain has no tokens")
    rounds = [r0]
    stopped, error = STOP_MAX_ROUNDS, None
    for i in range(1, cfg.max_rounds + 1):
        try:
            ri = compress_round(gateway, endpoint, q, rounds[-1], cfg, round_index=i)
        except CompressionError as e:
            logger.error("question %s: %s", q.id, e)
            stopped, error = STOP_ERROR, str(e)
            break
        rounds.append(ri)
        if ri.token_count > rounds[-2].token_count:
            stopped = STOP_LENGTH_REBOUND
            break
    usable = len(rounds) - 1 if stopped == STOP_LENGTH_REBOUND else len(rounds)
    lengths = [r.token_count for r in rounds]
    return CompressionTrajectory(
        question=q,
        rounds=tuple(rounds),
        rates=tuple(compression_rate(n, lengths[0]) for n in lengths),
        selected_index=select_final(lengths, usable),
        stopped_reason=stopped,
        error=error,
    )


def initial_trajectory(q: Question, r0: ReasoningTrace) -> CompressionTrajectory:
    """Round-0-only trajectory, before any compression has run."""
    rates = (compression_rate(r0.token_count, r0.token_count),) if r0.token_count > 0 else (0.0,)
    return CompressionTrajectory(question=q, rounds=(r0,), rates=rates)


PER_ROUND_HEADER = ("question_id", "round", "token_count", "rate", "usable")


def per_round_csv(trajectories: Sequence[CompressionTrajectory]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PER_ROUND_HEADER)
    for t in trajectories:
        for i, (r, rate) in enumerate(zip(t.rounds, t.rates)):
            w.writerow([t.question.id, i, r.token_count, repr(rate), int(i < t.usable)])
    return buf.getvalue()
