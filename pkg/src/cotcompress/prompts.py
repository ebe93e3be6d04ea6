"""Prompt templates for chain-of-thought generation and compression."""

from __future__ import annotations

from .core import Question

GENERATION_TEMPLATE = (
    "Please reason step by step, and put your final answer within \\boxed{{}}.\n"
    "\n"
    "QUESTION:\n{question}\n"
)

COMPRESSION_TEMPLATE = (
    "You have a question now:\n"
    "QUESTION:\n{question}\n"
    "THOUGHT PROCESS: {cot}\n"
    "ANSWER:\n{answer}\n"
    "Now you need to simplify the THOUGHT PROCESS and retain the key information "
    "needed to solve the question.\n"
    "And do not add additional information that is not included in the original "
    "THOUGHT PROCESS.\n"
    "SIMPLIFIED THOUGHT PROCESS:"
)


def render_generation_prompt(q: Question) -> str:
    return GENERATION_TEMPLATE.format(question=q.text)


def render_compression_prompt(q: Question, cot: str, answer: str = "") -> str:
    if not cot:
        raise ValueError("cannot build a compression prompt for an empty chain of thought")
    return COMPRESSION_TEMPLATE.format(question=q.text, cot=cot, answer=answer or "")
