"""Model access: hosted chat-completion endpoints and an offline replay backend.

The :class:`Gateway` owns per-endpoint concurrency limits, request pacing and
retries. Backends only know how to turn one prompt into one response.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
import uuid
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Protocol

import httpx

logger = logging.getLogger(__name__)

DEFAULT_ATTEMPTS = 3


class GatewayError(RuntimeError):
    def __init__(self, message: str, endpoint: str = "", request_id: str = ""):
        self.endpoint = endpoint
        self.request_id = request_id
        self.detail = message
        prefix = f"[{endpoint}" + (f" request={request_id}" if request_id else "") + "] "
        super().__init__(prefix + message if endpoint else message)


class TransientError(GatewayError):
    """Failure worth retrying: transport errors, timeouts, 429 and 5xx."""


class FixtureMiss(GatewayError):
    def __init__(self, sha: str, endpoint: str = "", request_id: str = ""):
        self.sha = sha
        super().__init__(f"fixture miss: no recorded entry for prompt sha256 {sha}", endpoint, request_id)


class ScoringUnsupported(GatewayError):
    pass


class ResponseValidationError(GatewayError):
    pass


@dataclass(frozen=True)
class ModelEndpoint:
    name: str
    base_url: str = "https://api.openai.com/v1"
    auth: Optional[str] = "OPENAI_API_KEY"  # name of the env var holding the key
    temperature: float = 0.0
    max_tokens: int = 1024
    max_in_flight: int = 4
    requests_per_minute: int = 60
    timeout_s: float = 60.0
    request_logprobs: bool = False
    supports_scoring: bool = False

    def __post_init__(self):
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")
        if self.requests_per_minute < 1:
            raise ValueError("requests_per_minute must be >= 1")

    @classmethod
    def from_dict(cls, d: dict) -> ModelEndpoint:
        d = dict(d)
        decoding = d.pop("decoding", None) or {}
        d.update(decoding)
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown endpoint keys: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class Completion:
    text: str
    latency_s: float = 0.0
    logprobs: Optional[tuple[float, ...]] = None
    token_count_reported: Optional[int] = None

    def __post_init__(self):
        if self.latency_s < 0:
            raise ValueError("latency_s must be non-negative")


def prompt_sha(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


def _check_logprobs(lps, endpoint: str, request_id: str = "") -> Optional[tuple[float, ...]]:
    if lps is None:
        return None
    out = tuple(float(x) for x in lps)
    bad = [x for x in out if x > 0]
    if bad:
        raise ResponseValidationError(f"log-probability above zero: {bad[0]}", endpoint, request_id)
    return out


class Backend(Protocol):
    def complete(self, endpoint: ModelEndpoint, prompt: str, request_id: str) -> Completion: ...

    def score(self, endpoint: ModelEndpoint, text: str, request_id: str) -> tuple[float, ...]: ...


class ReplayBackend:
    """Serves recorded completions keyed by the sha256 of the exact prompt bytes.

    Fixture lines are ``{"prompt_sha", "text", "logprobs"?, "latency_s"}``.
    Scoring lookups use the sha256 of the scored text and need ``logprobs``.
    """

    def __init__(self, entries: Iterable[dict] = ()):
        self._entries: dict[str, dict] = {}
        self.misses: list[str] = []
        self._lock = threading.Lock()
        for e in entries:
            self._entries[e["prompt_sha"]] = e

    @classmethod
    def from_file(cls, path) -> ReplayBackend:
        entries = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    entries.append(json.loads(line))
        return cls(entries)

    def add(self, prompt: str, text: str, latency_s: float = 0.0, logprobs=None) -> str:
        sha = prompt_sha(prompt)
        e = {"prompt_sha": sha, "text": text, "latency_s": latency_s}
        if logprobs is not None:
            e["logprobs"] = list(logprobs)
        self._entries[sha] = e
        return sha

    def entries(self) -> list[dict]:
        return [self._entries[k] for k in sorted(self._entries)]

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for e in self.entries():
                fh.write(json.dumps(e, ensure_ascii=False, sort_keys=True) + "\n")

    def _lookup(self, key: str, endpoint: ModelEndpoint, request_id: str) -> dict:
        e = self._entries.get(key)
        if e is None:
            with self._lock:
                self.misses.append(key)
            raise FixtureMiss(key, endpoint.name, request_id)
        return e

    def complete(self, endpoint: ModelEndpoint, prompt: str, request_id: str) -> Completion:
        e = self._lookup(prompt_sha(prompt), endpoint, request_id)
        return Completion(
            text=e["text"],
            latency_s=float(e.get("latency_s", 0.0)),
            logprobs=_check_logprobs(e.get("logprobs"), endpoint.name, request_id),
            token_count_reported=e.get("token_count_reported"),
        )

    def score(self, endpoint: ModelEndpoint, text: str, request_id: str) -> tuple[float, ...]:
        e = self._lookup(prompt_sha(text), endpoint, request_id)
        if e.get("logprobs") is None:
            raise ScoringUnsupported(
                "replay entry has no logprobs for scoring", endpoint.name, request_id
            )
        return _check_logprobs(e["logprobs"], endpoint.name, request_id)


class RecordingBackend:
    """Passes calls through to ``inner`` and records the results as replay fixtures."""

    def __init__(self, inner: Backend, store: Optional[ReplayBackend] = None):
        self.inner = inner
        self.store = store if store is not None else ReplayBackend()
        self._lock = threading.Lock()

    def complete(self, endpoint, prompt, request_id):
        c = self.inner.complete(endpoint, prompt, request_id)
        with self._lock:
            self.store.add(prompt, c.text, c.latency_s, c.logprobs)
        return c

    def score(self, endpoint, text, request_id):
        lps = self.inner.score(endpoint, text, request_id)
        with self._lock:
            self.store.add(text, text, 0.0, lps)
        return lps


class HTTPBackend:
    """OpenAI-compatible JSON protocol over httpx.

    Completions use ``POST {base_url}/chat/completions`` with one user message.
    Scoring uses the legacy ``/completions`` route with ``echo`` and
    ``max_tokens=0``, which only some servers implement; endpoints must opt in
    through ``supports_scoring``.
    """

    def __init__(self, client: Optional[httpx.Client] = None, env=None, clock=time.monotonic):
        self.client = client or httpx.Client()
        self.env = os.environ if env is None else env
        self.clock = clock

    def _headers(self, endpoint: ModelEndpoint, request_id: str) -> dict:
        headers = {"Content-Type": "application/json", "X-Request-ID": request_id}
        if endpoint.auth:
            key = self.env.get(endpoint.auth)
            if not key:
                raise GatewayError(f"missing credentials: env var {endpoint.auth} is unset", endpoint.name, request_id)
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def _post(self, endpoint: ModelEndpoint, route: str, payload: dict, request_id: str) -> dict:
        url = endpoint.base_url.rstrip("/") + route
        try:
            resp = self.client.post(
                url, json=payload, headers=self._headers(endpoint, request_id), timeout=endpoint.timeout_s
            )
        except httpx.TimeoutException as e:
            raise TransientError(f"timeout: {e}", endpoint.name, request_id) from e
        except httpx.TransportError as e:
            raise TransientError(f"transport error: {e}", endpoint.name, request_id) from e
        rid = resp.headers.get("x-request-id", request_id)
        if resp.status_code == 429 or resp.status_code >= 500:
            raise TransientError(f"HTTP {resp.status_code}: {resp.text[:200]}", endpoint.name, rid)
        if not 200 <= resp.status_code < 300:
            raise GatewayError(f"HTTP {resp.status_code}: {resp.text[:200]}", endpoint.name, rid)
        try:
            return resp.json()
        except ValueError as e:
            raise GatewayError(f"malformed response body: {e}", endpoint.name, rid) from e

    def complete(self, endpoint: ModelEndpoint, prompt: str, request_id: str) -> Completion:
        payload = {
            "model": endpoint.name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": endpoint.temperature,
            "max_tokens": endpoint.max_tokens,
        }
        if endpoint.request_logprobs:
            payload["logprobs"] = True
        t0 = self.clock()
        body = self._post(endpoint, "/chat/completions", payload, request_id)
        latency = max(0.0, self.clock() - t0)
        try:
            choice = body["choices"][0]
            text = choice["message"]["content"]
            if not isinstance(text, str):
                raise TypeError("message content is not a string")
            lps = None
            lp_block = choice.get("logprobs") or {}
            if lp_block.get("content") is not None:
                lps = [tok["logprob"] for tok in lp_block["content"]]
            usage = body.get("usage") or {}
            reported = usage.get("completion_tokens")
        except (KeyError, IndexError, TypeError) as e:
            raise GatewayError(f"malformed response body: {e!r}", endpoint.name, request_id) from e
        return Completion(
            text=text,
            latency_s=latency,
            logprobs=_check_logprobs(lps, endpoint.name, request_id),
            token_count_reported=reported,
        )

    def score(self, endpoint: ModelEndpoint, text: str, request_id: str) -> tuple[float, ...]:
        if not endpoint.supports_scoring:
            raise ScoringUnsupported(
                "endpoint does not support echo scoring; use a fixture scorer", endpoint.name, request_id
            )
        payload = {"model": endpoint.name, "prompt": text, "echo": True, "logprobs": 0, "max_tokens": 0}
        body = self._post(endpoint, "/completions", payload, request_id)
        try:
            lps = body["choices"][0]["logprobs"]["token_logprobs"]
        except (KeyError, IndexError, TypeError) as e:
            raise GatewayError(f"malformed response body: {e!r}", endpoint.name, request_id) from e
        # the first token has no conditional probability
        return _check_logprobs([x for x in lps if x is not None], endpoint.name, request_id)


class RateLimiter:
    """Spaces request starts at least ``60 / requests_per_minute`` seconds apart."""

    def __init__(self, requests_per_minute: int, clock=time.monotonic, sleep=time.sleep):
        self.interval = 60.0 / requests_per_minute
        self.clock = clock
        self.sleep = sleep
        self._next = None
        self._lock = threading.Lock()

    def acquire(self) -> None:
        with self._lock:
            now = self.clock()
            start = now if self._next is None else max(now, self._next)
            self._next = start + self.interval
        wait = start - now
        if wait > 0:
            self.sleep(wait)


@dataclass
class _Limits:
    semaphore: threading.BoundedSemaphore
    limiter: RateLimiter


@dataclass
class Gateway:
    backend: Backend
    attempts: int = DEFAULT_ATTEMPTS
    backoff_base: float = 1.0
    backoff_cap: float = 8.0
    sleep: Callable[[float], None] = time.sleep
    clock: Callable[[], float] = time.monotonic
    rate_limit: bool = True  # replay backends have nothing to protect
    _limits: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def _limits_for(self, endpoint: ModelEndpoint) -> _Limits:
        with self._lock:
            lim = self._limits.get(endpoint.name)
            if lim is None:
                lim = _Limits(
                    threading.BoundedSemaphore(endpoint.max_in_flight),
                    RateLimiter(endpoint.requests_per_minute, self.clock, self.sleep),
                )
                self._limits[endpoint.name] = lim
            return lim

    def _call(self, endpoint: ModelEndpoint, fn):
        lim = self._limits_for(endpoint)
        last = None
        for attempt in range(self.attempts):
            request_id = uuid.uuid4().hex
            with lim.semaphore:
                if self.rate_limit:
                    lim.limiter.acquire()
                try:
                    return fn(request_id)
                except TransientError as e:
                    last = e
                    logger.warning("%s attempt %d/%d failed: %s", endpoint.name, attempt + 1, self.attempts, e)
            if attempt + 1 < self.attempts:
                self.sleep(min(self.backoff_cap, self.backoff_base * 2**attempt))
        raise GatewayError(
            f"failed after {self.attempts} attempts: {last.detail if last else 'no attempt made'}", endpoint.name, last.request_id if last else ""
        ) from last

    def complete(self, endpoint: ModelEndpoint, prompt: str) -> Completion:
        return self._call(endpoint, lambda rid: self.backend.complete(endpoint, prompt, rid))

    def score_logprobs(self, endpoint: ModelEndpoint, text: str) -> tuple[float, ...]:
        if not text:
            return ()
        return self._call(endpoint, lambda rid: self.backend.score(endpoint, text, rid))
