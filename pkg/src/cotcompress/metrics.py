"""Token counting, answer matching and efficiency metrics."""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

SCHEME_WHITESPACE = "whitespace"
SCHEME_UNICODE_WORD = "unicode-word"
SCHEME_ENDPOINT = "endpoint-reported"
TOKEN_SCHEMES = (SCHEME_WHITESPACE, SCHEME_UNICODE_WORD, SCHEME_ENDPOINT)
DEFAULT_SCHEME = SCHEME_UNICODE_WORD

# word runs (letters, digits, marks, underscore) or any single non-space symbol
_WORD_SEGMENT = re.compile(r"\w+|[^\w\s]")


class MetricError(ValueError):
    pass


def count_tokens(text: str, scheme: str = DEFAULT_SCHEME, reported: Optional[int] = None) -> int:
    if scheme == SCHEME_WHITESPACE:
        return len(text.split())
    if scheme == SCHEME_UNICODE_WORD:
        return len(_WORD_SEGMENT.findall(text))
    if scheme == SCHEME_ENDPOINT:
        if reported is None:
            raise MetricError("endpoint-reported token count requested but none was reported")
        return int(reported)
    raise MetricError(f"unknown token scheme {scheme!r}; expected one of {TOKEN_SCHEMES}")


def extract_boxed_answer(text: str) -> Optional[str]:
    """Content of the last ``\\boxed{...}`` group, or None if there is none.

    Nested braces are allowed; an unterminated group is ignored and the search
    moves to the previous occurrence.
    """
    end = len(text)
    while True:
        idx = text.rfind("\\boxed", 0, end)
        if idx < 0:
            return None
        j = idx + len("\\boxed")
        while j < len(text) and text[j] == " ":
            j += 1
        if j < len(text) and text[j] == "{":
            depth = 0
            for k in range(j, len(text)):
                c = text[k]
                if c == "{":
                    depth += 1
                elif c == "}":
                    depth -= 1
                    if depth == 0:
                        return text[j + 1 : k]
        end = idx


_FRAC = re.compile(r"^\\[dt]?frac\{([^{}]+)\}\{([^{}]+)\}$")
_THOUSANDS = re.compile(r"(?<=\d),(?=\d{3}(?:\D|$))")
_NUMBER = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)$")


def _parse_number(s: str) -> Optional[Fraction]:
    s = s.strip()
    m = _FRAC.match(s)
    if m:
        num, den = _parse_number(m.group(1)), _parse_number(m.group(2))
        if num is None or den is None or den == 0:
            return None
        return num / den
    if "/" in s:
        num, _, den = s.partition("/")
        a, b = _parse_number(num), _parse_number(den)
        if a is None or b is None or b == 0:
            return None
        return a / b
    if _NUMBER.match(s):
        return Fraction(s)
    return None


def normalize_answer(raw: Optional[str]) -> Optional[str]:
    """Canonical form used for answer matching.

    Numeric answers (integers, decimals, ``a/b``, ``\\frac{a}{b}``) become an
    exact rational rendered as ``n`` or ``p/q``; anything else is lowercased
    with runs of whitespace collapsed.
    """
    if raw is None:
        return None
    s = raw.strip().replace("$", "").replace("\\!", "")
    s = _THOUSANDS.sub("", s)
    s = s.strip().rstrip(".").strip()
    value = _parse_number(s)
    if value is not None:
        return str(value)
    return " ".join(s.lower().split())


def accuracy(records: Sequence[tuple[Optional[str], Optional[str]]]) -> float:
    """Fraction of (predicted, gold) pairs that match after normalization."""
    if not records:
        raise MetricError("accuracy of an empty record list is undefined")
    correct = 0
    for pred, gold in records:
        if gold is None:
            raise MetricError("every record needs a gold answer")
        p = normalize_answer(pred)
        if p is not None and p == normalize_answer(gold):
            correct += 1
    return correct / len(records)


def token_efficiency(acc_percent: float, mean_tokens: float) -> float:
    if mean_tokens <= 0:
        raise MetricError("mean_tokens must be positive")
    return acc_percent / mean_tokens * 100.0


def perplexity(logprobs: Sequence[float]) -> float:
    if len(logprobs) == 0:
        raise MetricError("perplexity of an empty sequence is undefined")
    if any(lp > 0 for lp in logprobs):
        raise MetricError("log-probabilities must be <= 0")
    return math.exp(-math.fsum(logprobs) / len(logprobs))


@dataclass(frozen=True)
class EvalSummary:
    n: int
    accuracy: float
    mean_tokens: float
    mean_latency_s: float
    token_efficiency: float

    def to_dict(self) -> dict:
        return asdict(self)

    def to_csv_row(self, header: bool = True) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(self.to_dict()), lineterminator="\n")
        if header:
            w.writeheader()
        w.writerow(self.to_dict())
        return buf.getvalue()


def summarize(
    predictions: Iterable[tuple[str, Optional[str], Optional[float]]],
    scheme: str = DEFAULT_SCHEME,
) -> EvalSummary:
    """Summarize (generated_text, gold_answer, latency_s) triples."""
    pairs, tokens, latencies = [], [], []
    for text, gold, latency in predictions:
        pairs.append((extract_boxed_answer(text), gold))
        tokens.append(count_tokens(text, scheme))
        if latency is not None:
            latencies.append(latency)
    acc = accuracy(pairs)
    mean_tokens = sum(tokens) / len(tokens)
    return EvalSummary(
        n=len(pairs),
        accuracy=acc,
        mean_tokens=mean_tokens,
        mean_latency_s=sum(latencies) / len(latencies) if latencies else 0.0,
        token_efficiency=token_efficiency(acc * 100.0, mean_tokens),
    )
