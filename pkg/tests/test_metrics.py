from __future__ import annotations

import math
import unicodedata

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cotcompress.metrics import (
    MetricError,
    accuracy,
    count_tokens,
    extract_boxed_answer,
    normalize_answer,
    perplexity,
    summarize,
    token_efficiency,
)
from cotcompress.repro.appendix import CLIPS_ROUNDS, QUADRATIC_ROUNDS


def segment_oracle(text: str) -> int:
    """Independent segmenter: maximal runs of letter/number/underscore, else one token per symbol."""

    def is_word(c):
        return c == "_" or unicodedata.category(c)[0] in "LN" or unicodedata.category(c) in ("Mn", "Mc")

    n, in_word = 0, False
    for c in text:
        if c.isspace():
            in_word = False
        elif is_word(c):
            if not in_word:
                n += 1
            in_word = True
        else:
            n += 1
            in_word = False
    return n


def test_whitespace_runs():
    assert count_tokens("a b  c", "whitespace") == 3


@pytest.mark.parametrize("scheme", ["whitespace", "unicode-word"])
def test_empty_text(scheme):
    assert count_tokens("", scheme) == 0


def test_unicode_word_golden():
    text = "48 ÷ 2 = 24."
    assert segment_oracle(text) == 6
    assert count_tokens(text, "unicode-word") == 6


@given(st.text(alphabet=st.characters(min_codepoint=0x20, max_codepoint=0x24F), max_size=60))
def test_unicode_word_matches_oracle(text):
    assert count_tokens(text, "unicode-word") == segment_oracle(text)


def test_endpoint_scheme():
    assert count_tokens("whatever", "endpoint-reported", reported=17) == 17
    with pytest.raises(MetricError):
        count_tokens("whatever", "endpoint-reported")
    with pytest.raises(MetricError):
        count_tokens("x", "bpe")


def test_boxed_extraction_on_worked_examples():
    assert extract_boxed_answer(CLIPS_ROUNDS[0]) == "72"
    assert extract_boxed_answer(QUADRATIC_ROUNDS[0]) == "5"
    assert extract_boxed_answer("The final answer is: $\\boxed{5}$") == "5"
    assert extract_boxed_answer("...Therefore ... $\\boxed{72}$") == "72"
    assert extract_boxed_answer("no box here") is None


def test_boxed_nested_and_last():
    assert extract_boxed_answer("\\boxed{1} then \\boxed{\\frac{1}{2}}") == "\\frac{1}{2}"
    assert extract_boxed_answer("\\boxed{3} and \\boxed{unterminated") == "3"


@pytest.mark.parametrize(
    "raw,want",
    [(" 72. ", "72"), ("1/2", "1/2"), ("0.5", "1/2"), ("\\frac{10}{2}", "5"), ("1,000", "1000"), ("$24$", "24"), ("Yes", "yes")],
)
def test_normalize(raw, want):
    assert normalize_answer(raw) == want


def test_accuracy():
    assert accuracy([("4", "4"), ("5", "5")]) == 1.0
    assert accuracy([("1", "1"), ("2", "2"), ("3", "3"), ("0", "4")]) == 0.75
    assert accuracy([(None, "4"), ("4", "4")]) == 0.5
    with pytest.raises(MetricError):
        accuracy([])


def test_token_efficiency():
    assert token_efficiency(81.1, 88.57) == pytest.approx(91.57, abs=0.01)
    assert token_efficiency(86.2, 148.76) == pytest.approx(57.95, abs=0.02)
    assert token_efficiency(0, 12.0) == 0
    with pytest.raises(MetricError):
        token_efficiency(50, 0)


def test_perplexity_fixtures():
    assert abs(perplexity([math.log(0.25)] * 7) - 4.0) <= 1e-9
    assert perplexity([0.0, 0.0]) == 1.0
    # geometric mean oracle: sqrt(2 * 8)
    assert abs(perplexity([math.log(0.5), math.log(0.125)]) - math.sqrt(2 * 8)) <= 1e-9
    with pytest.raises(MetricError):
        perplexity([])


def test_summarize():
    s = summarize([("so \\boxed{4}", "4", 1.0), ("\\boxed{3}", "4", 3.0)], "whitespace")
    assert (s.n, s.accuracy, s.mean_tokens, s.mean_latency_s) == (2, 0.5, 1.5, 2.0)
    assert s.token_efficiency == pytest.approx(50 / 1.5 * 100)
    assert s.to_csv_row().splitlines()[0] == "n,accuracy,mean_tokens,mean_latency_s,token_efficiency"
