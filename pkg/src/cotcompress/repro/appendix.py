"""Worked multi-round compression examples used as replay fixtures.

``CLIPS_ROUNDS`` is a GSM8K chain compressed five times by gpt-4o-mini and
``QUADRATIC_ROUNDS`` a MATH chain compressed eight times by the same model.
:func:`build_fixture_backend` turns a chain into replay entries: one for the
generation prompt and one per compression prompt, each answered by the next
round's text.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

from ..compressor import make_trace
from ..core import Question
from ..gateway import ReplayBackend
from ..metrics import DEFAULT_SCHEME
from ..prompts import render_compression_prompt, render_generation_prompt

CLIPS_QUESTION = Question(
    id="gsm8k-clips",
    text=(
        "Natalia sold clips to 48 of her friends in April, and then she sold half as many "
        "clips in May. How many clips did Natalia sell altogether in April and May?"
    ),
    gold_answer="72",
)

_CLIPS_FINAL = "1. Natalia sold 48 clips in April. 2. In May, she sold 24 clips (half of April). 3. Total sold: 48 + 24 = 72."

CLIPS_ROUNDS = (
    "Let's break it down step by step: 1. Natalia sold clips to 48 of her friends in April. "
    "2. In May, she sold half as many clips as she did in April. To find half of 48, we divide 48 by 2: "
    "48 ÷ 2 = 24. So, Natalia sold 24 clips in May. 3. To find the total number of clips she sold in April "
    "and May, we add the number of clips she sold in each month: 48 (April) + 24 (May) = 72. Therefore, "
    "Natalia sold 72 clips altogether in April and May. $\\boxed{72}$",
    "1. Natalia sold 48 clips in April. 2. In May, she sold half of that: 48 ÷ 2 = 24. "
    "3. Total clips sold in April and May: 48 + 24 = 72. $\\boxed{72}$",
    "1. Natalia sold 48 clips in April. 2. In May, she sold 24 clips (half of April). "
    "3. Total sold: 48 + 24 = 72. $\\boxed{72}$",
    _CLIPS_FINAL,
    _CLIPS_FINAL,
    _CLIPS_FINAL,
)
# the round highlighted as the selected chain
CLIPS_HIGHLIGHTED_ROUND = 3

QUADRATIC_QUESTION = Question(
    id="math-quadratic-sum",
    text="What is the sum of the values of $x$ that satisfy the equation $x^2-5x+5=9$?",
    gold_answer="5",
)

_Q_STEPS_1_3 = (
    "Step 1: Write down the given equation The equation is \\( x^2 - 5x + 5 = 9 \\).  "
    "Step 2: Set the equation to zero This leads to \\( x^2 - 5x - 4 = 0 \\).  "
    "Step 3: Use the quadratic formula Using \\( x = \\frac{-b \\pm \\sqrt{b^2 - 4ac}}{2a} \\) with "
    "\\( a = 1 \\), \\( b = -5 \\), \\( c = -4 \\).  "
)
_Q_ROUND_2 = (
    "Step 1: Write down the given equation The equation is  \\( x^2 - 5x + 5 = 9  \\).  "
    "Step 2: Set the equation to zero This leads to  \\( x^2 - 5x - 4 = 0  \\).  "
    "Step 3: Use the quadratic formula Using  \\( x =  \\frac{-b  \\pm  \\sqrt{b^2 - 4ac}}{2a}  \\) with  "
    "\\( a = 1  \\),  \\( b = -5  \\),  \\( c = -4  \\).  "
    "Step 4: Substitute values into the formula This results in  \\( x =  \\frac{5  \\pm  \\sqrt{41}}{2}  \\).  "
    "Step 5: Find the sum of the solutions The sum is  \\(  \\frac{5 +  \\sqrt{41}}{2} +  \\frac{5 -  \\sqrt{41}}{2} = 5  \\). "
    "Final answer:  \\(  \\boxed{5}  \\)"
)
_Q_ROUND_4 = (
    _Q_STEPS_1_3
    + "Step 4: Substitute values into the formula This results in \\( x = \\frac{5 \\pm \\sqrt{41}}{2} \\).  "
    "Step 5: Find the sum of the solutions The sum is \\( 5 \\). Final answer: \\( \\boxed{5} \\)"
)

QUADRATIC_ROUNDS = (
    "Step 1: Write down the given equation The given equation is $x^2-5x+5=9$.  "
    "Step 2: Subtract 9 from both sides of the equation to set it equal to zero Subtracting 9 from both sides "
    "gives $x^2-5x-4=0$.  Step 3: Use the quadratic formula to find the solutions for x The quadratic formula "
    "is $x=\\frac{-b\\pm\\sqrt{b^2-4ac}}{2a}$, where $a=1$, $b=-5$, and $c=-4$.  Step 4: Plug the values of a, "
    "b, and c into the quadratic formula Plugging in the values gives "
    "$x=\\frac{-(-5)\\pm\\sqrt{(-5)^2-4(1)(-4)}}{2(1)}$.  Step 5: Simplify the expression under the square root "
    "Simplifying the expression gives $x=\\frac{5\\pm\\sqrt{25+16}}{2}$.  Step 6: Continue simplifying the "
    "expression under the square root Continuing to simplify gives $x=\\frac{5\\pm\\sqrt{41}}{2}$.  Step 7: The "
    "sum of the values of x is the sum of the two solutions The sum of the values of x is "
    "$\\frac{5+\\sqrt{41}}{2}+\\frac{5-\\sqrt{41}}{2}$.  Step 8: Simplify the sum of the two solutions "
    "Simplifying the sum gives $\\frac{10}{2}$.  Step 9: Simplify the fraction Simplifying the fraction gives "
    "$5$. The final answer is: $\\boxed{5}$",
    "Step 1: Write down the given equation The given equation is \\( x^2 - 5x + 5 = 9 \\).   "
    "Step 2: Set the equation to zero Subtracting 9 from both sides gives \\( x^2 - 5x - 4 = 0 \\).   "
    "Step 3: Use the quadratic formula Using the quadratic formula \\( x = \\frac{-b \\pm \\sqrt{b^2 - 4ac}}{2a} \\) "
    "with \\( a = 1 \\), \\( b = -5 \\), and \\( c = -4 \\).   "
    "Step 4: Substitute values into the formula Substituting gives \\( x = \\frac{5 \\pm \\sqrt{(-5)^2 - 4(1)(-4)}}{2(1)} \\).   "
    "Step 5: Simplify the expression This simplifies to \\( x = \\frac{5 \\pm \\sqrt{25 + 16}}{2} = \\frac{5 \\pm \\sqrt{41}}{2} \\).   "
    "Step 6: Find the sum of the solutions The sum of the solutions is "
    "\\( \\frac{5 + \\sqrt{41}}{2} + \\frac{5 - \\sqrt{41}}{2} = \\frac{10}{2} = 5 \\).  "
    "The final answer is: \\( \\boxed{5} \\)",
    _Q_ROUND_2,
    _Q_ROUND_2,
    _Q_ROUND_4,
    _Q_ROUND_4,
    _Q_ROUND_4,
    _Q_ROUND_4,
    _Q_STEPS_1_3.replace("This leads to", "Subtracting 9 gives")
    + "Step 4: Substitute values into the formula This gives "
    "\\( x = \\frac{5 \\pm \\sqrt{25 + 16}}{2} = \\frac{5 \\pm \\sqrt{41}}{2} \\).  "
    "Step 5: Find the sum of the solutions The sum is "
    "\\( \\frac{5 + \\sqrt{41}}{2} + \\frac{5 - \\sqrt{41}}{2} = \\frac{10}{2} = 5 \\).  "
    "The final answer is: \\( \\boxed{5} \\)",
)
QUADRATIC_HIGHLIGHTED_ROUND = 8


def _chain_prompts(q: Question, rounds: Sequence[str], scheme: str) -> list[tuple[str, str]]:
    pairs = [(render_generation_prompt(q), rounds[0])]
    prev = make_trace(rounds[0], scheme)
    for text in rounds[1:]:
        pairs.append((render_compression_prompt(q, prev.text, prev.answer or ""), text))
        prev = make_trace(text, scheme, fallback_answer=prev.answer)
    return pairs


def chain_conflicts(q: Question, rounds: Sequence[str], scheme: str = DEFAULT_SCHEME) -> list[int]:
    """Rounds whose prompt was already answered differently earlier in the chain.

    Two identical consecutive rounds produce the same next prompt, so a replay
    keyed by prompt can only serve one continuation; these rounds cannot be
    reproduced by any deterministic compressor.
    """
    seen: dict[str, str] = {}
    out = []
    for i, (prompt, text) in enumerate(_chain_prompts(q, rounds, scheme)):
        if prompt in seen and seen[prompt] != text:
            out.append(i)
        seen.setdefault(prompt, text)
    return out


def chain_entries(q: Question, rounds: Sequence[str], scheme: str = DEFAULT_SCHEME, latency_s: float = 0.0) -> list[dict]:
    """Replay entries that reproduce ``rounds`` when the pipeline runs on ``q``.

    Where a prompt repeats, the first continuation wins (see :func:`chain_conflicts`).
    """
    store = ReplayBackend()
    seen = set()
    for prompt, text in _chain_prompts(q, rounds, scheme):
        if prompt not in seen:
            seen.add(prompt)
            store.add(prompt, text, latency_s)
    return store.entries()


def build_fixture_backend(scheme: str = DEFAULT_SCHEME) -> ReplayBackend:
    entries = chain_entries(CLIPS_QUESTION, CLIPS_ROUNDS, scheme) + chain_entries(
        QUADRATIC_QUESTION, QUADRATIC_ROUNDS, scheme
    )
    return ReplayBackend(entries)


APPENDIX_QUESTIONS = (CLIPS_QUESTION, QUADRATIC_QUESTION)

# frozen copies of the entries above; a test regenerates and compares them so that
# any change to the prompt templates or the chains shows up as a fixture diff
DATA_DIR = Path(__file__).with_name("data")
FIXTURES_FILE = DATA_DIR / "appendix_fixtures.jsonl"
QUESTIONS_FILE = DATA_DIR / "appendix_questions.jsonl"


def write_fixture_files(fixtures_path=FIXTURES_FILE, questions_path=QUESTIONS_FILE, scheme: str = DEFAULT_SCHEME) -> None:
    build_fixture_backend(scheme).save(fixtures_path)
    with open(questions_path, "w", encoding="utf-8") as fh:
        for q in APPENDIX_QUESTIONS:
            fh.write(json.dumps(q.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")
