from __future__ import annotations

import threading

import pytest

from cotcompress.core import Question
from cotcompress.gateway import Completion, Gateway, ModelEndpoint


def chain_text(i: int, n: int) -> str:
    """A distinct chain of exactly ``n`` whitespace tokens for round ``i``."""
    return " ".join([f"r{i}"] + ["w"] * (n - 1))


class ScriptedBackend:
    """Answers round i's compression prompt with ``chain_text(i, lengths[i])``.

    The round is recovered from the ``r{i}`` tag of the chain embedded in the prompt.
    """

    def __init__(self, lengths, fail_at=None):
        self.lengths = list(lengths)
        self.fail_at = fail_at
        self.calls = 0
        self._lock = threading.Lock()

    def complete(self, endpoint, prompt, request_id):
        with self._lock:
            self.calls += 1
        if "THOUGHT PROCESS: " not in prompt:
            return Completion(chain_text(0, self.lengths[0]))
        cot = prompt.split("THOUGHT PROCESS: ", 1)[1]
        prev = int(cot.split(" ", 1)[0].split("\n", 1)[0][1:])
        i = prev + 1
        if self.fail_at is not None and i == self.fail_at:
            from cotcompress.gateway import GatewayError

            raise GatewayError("scripted failure", endpoint.name, request_id)
        return Completion(chain_text(i, self.lengths[i]))

    def score(self, endpoint, text, request_id):
        return ()


@pytest.fixture
def endpoint():
    return ModelEndpoint(name="fake", auth=None, requests_per_minute=10**9)


@pytest.fixture
def question():
    return Question(id="q1", text="What is 2+2?", gold_answer="4")


def no_sleep_gateway(backend, **kw):
    return Gateway(backend, sleep=lambda s: None, **kw)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
