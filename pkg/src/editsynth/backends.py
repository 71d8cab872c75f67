"""Text-generation backends behind one generate() interface.

Two implementations: a chat-completion wire client (HTTP POST to
``<base_url>/chat/completions``) and a deterministic mock for tests and
offline runs. Neither mutates the history it is given.
"""
from __future__ import annotations

import hashlib
import os
import random
import threading
import time
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import httpx

from .errors import ConfigError, ContextOverflow, RateLimited, TransportError
from .prompts import (
    DESCRIPTIVE_MARKER,
    LAZY_MARKER,
    PRE_EDIT_MARKER,
    UNREASONABLE_TOKEN,
)

API_KEY_ENV = "OCE_API_KEY"

ROLE_SYSTEM = "system"
ROLE_USER = "user"
ROLE_ASSISTANT = "assistant"
_ROLES = (ROLE_SYSTEM, ROLE_USER, ROLE_ASSISTANT)


@dataclass(frozen=True)
class GenParams:
    model_id: str
    temperature: float = 0.8
    top_p: float = 0.95
    max_tokens: int = 2048

    def __post_init__(self) -> None:
        if not 0 <= self.temperature <= 2:
            raise ValueError("temperature must be in [0, 2]")
        if not 0 < self.top_p <= 1:
            raise ValueError("top_p must be in (0, 1]")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")


@dataclass(frozen=True)
class ChatTurn:
    role: str
    content: str

    def __post_init__(self) -> None:
        if self.role not in _ROLES:
            raise ValueError(f"role must be one of {_ROLES}")
        if self.role != ROLE_SYSTEM and not self.content:
            raise ValueError("user/assistant turns must have content")


@dataclass(frozen=True)
class GenResult:
    text: str
    backend_id: str
    latency_ms: int
    retries_used: int


def _last_user_content(history: Sequence[ChatTurn]) -> str:
    if not history or history[-1].role != ROLE_USER:
        raise ValueError("history must end with a user turn")
    return history[-1].content


def prompt_digest(text: str) -> str:
    """Stable digest used to key scripted mock responses."""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class TokenBucket:
    """Dispatch gate: requests_per_minute tokens, 0 disables the limit."""

    def __init__(self, requests_per_minute: int, clock=time.monotonic, sleep=time.sleep):
        self.rate = requests_per_minute / 60.0
        self.capacity = max(1.0, self.rate)
        self._tokens = self.capacity
        self._clock = clock
        self._sleep = sleep
        self._last = clock()
        self._lock = threading.Lock()
        self.enabled = requests_per_minute > 0

    def acquire(self) -> None:
        if not self.enabled:
            return
        while True:
            with self._lock:
                now = self._clock()
                self._tokens = min(self.capacity, self._tokens + (now - self._last) * self.rate)
                self._last = now
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return
                wait = (1.0 - self._tokens) / self.rate
            self._sleep(wait)


class ChatCompletionClient:
    """Wire client with bounded retries and exponential backoff.

    Transient failures (HTTP 429/5xx, network errors) are retried with
    delays drawn from [0, base * factor**attempt); other client errors and
    context overflows surface immediately.
    """

    def __init__(
        self,
        base_url: str,
        api_key: str | None = None,
        *,
        max_retries: int = 3,
        backoff_base: float = 1.0,
        backoff_factor: float = 2.0,
        timeout: float = 120.0,
        requests_per_minute: int = 0,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
        jitter_rng=None,
    ):
        if not base_url:
            raise ConfigError("gen.base_url is required for the remote backend")
        if api_key is None:
            api_key = os.environ.get(API_KEY_ENV, "")
        if not api_key:
            raise ConfigError(f"remote backend needs credentials in ${API_KEY_ENV}")
        self.base_url = base_url.rstrip("/")
        self.max_retries = max_retries
        self.backoff_base = backoff_base
        self.backoff_factor = backoff_factor
        self._sleep = sleep
        self._jitter = jitter_rng.random if jitter_rng is not None else random.random
        self._limiter = TokenBucket(requests_per_minute)
        self._client = httpx.Client(
            headers={"Authorization": f"Bearer {api_key}"},
            timeout=timeout,
            transport=transport,
        )

    def close(self) -> None:
        self._client.close()

    @staticmethod
    def _transient(message: str) -> TransportError:
        exc = TransportError(message)
        exc.retryable = True  # type: ignore[attr-defined]
        return exc

    def _post_once(self, payload: dict) -> str:
        try:
            resp = self._client.post(f"{self.base_url}/chat/completions", json=payload)
        except httpx.HTTPError as exc:
            raise self._transient(f"request failed: {exc}") from exc
        if resp.status_code == 429:
            raise RateLimited("backend returned 429")
        if resp.status_code >= 500:
            raise self._transient(f"backend returned {resp.status_code}")
        if resp.status_code >= 400:
            body = resp.text[:500]
            if "context" in body.lower() and ("length" in body.lower() or "window" in body.lower()):
                raise ContextOverflow(body)
            raise TransportError(f"backend returned {resp.status_code}: {body}")
        try:
            data = resp.json()
            return str(data["choices"][0]["message"]["content"])
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"malformed backend response: {exc}") from exc

    def generate(self, history: Sequence[ChatTurn], params: GenParams) -> GenResult:
        _last_user_content(history)
        payload = {
            "model": params.model_id,
            "messages": [{"role": t.role, "content": t.content} for t in history],
            "temperature": params.temperature,
            "top_p": params.top_p,
            "max_tokens": params.max_tokens,
        }
        start = time.monotonic()
        attempt = 0
        while True:
            self._limiter.acquire()
            try:
                text = self._post_once(payload)
                break
            except ContextOverflow:
                raise
            except RateLimited:
                if attempt >= self.max_retries:
                    raise
            except TransportError as exc:
                if not getattr(exc, "retryable", False) or attempt >= self.max_retries:
                    raise
            self._sleep(self.backoff_base * self.backoff_factor**attempt * self._jitter())
            attempt += 1
        latency_ms = int((time.monotonic() - start) * 1000)
        return GenResult(
            text=text,
            backend_id=params.model_id,
            latency_ms=latency_ms,
            retries_used=attempt,
        )


class MockBackend:
    """Deterministic test double keyed by the digest of the last user turn.

    Unknown digests fall back to a fixed string or, when fallback is a
    callable, to fallback(prompt_text). Safe for unrestricted concurrency.
    """

    backend_id = "mock"

    def __init__(
        self,
        script: Mapping[str, str] | None = None,
        fallback: str | Callable[[str], str] = UNREASONABLE_TOKEN,
    ):
        self.script = dict(script or {})
        self.fallback = fallback

    def generate(self, history: Sequence[ChatTurn], params: GenParams) -> GenResult:
        prompt = _last_user_content(history)
        digest = prompt_digest(prompt)
        if digest in self.script:
            text = self.script[digest]
        elif callable(self.fallback):
            text = self.fallback(prompt)
        else:
            text = self.fallback
        return GenResult(text=text, backend_id=self.backend_id, latency_ms=0, retries_used=0)


# Theme vocabulary for the demo responder: (topic words, verb, object noun).
_THEMES = (
    ("logging", ("logger", "handler", "message", "level", "format"), "add", "logging"),
    ("database", ("connection", "cursor", "query", "transaction", "commit"), "fix", "query"),
    ("parsing", ("token", "parser", "grammar", "syntax", "node"), "refactor", "parser"),
    ("caching", ("cache", "entry", "expiry", "lookup", "evict"), "add", "cache"),
    ("network", ("socket", "request", "response", "timeout", "retry"), "handle", "timeout"),
    ("validation", ("schema", "field", "constraint", "error", "input"), "validate", "input"),
    ("rendering", ("template", "widget", "layout", "pixel", "frame"), "update", "layout"),
    ("concurrency", ("thread", "lock", "worker", "queue", "task"), "guard", "worker"),
)


class DemoDialogueResponder:
    """Grammar-valid, fully deterministic responses for offline mock runs.

    Round-1 prompts get a themed pre-edit snippet plus lazy/descriptive
    instructions; round-2 prompts get the embedded pre-edit code with a
    couple of inserted lines, or the ill-posed token once every
    `unreasonable_every` pairs. Everything derives from the prompt digest.
    """

    def __init__(self, unreasonable_every: int = 23):
        self.unreasonable_every = unreasonable_every

    def __call__(self, prompt: str) -> str:
        if UNREASONABLE_TOKEN in prompt:
            return self._round2(prompt)
        return self._round1(prompt)

    @staticmethod
    def _seed(prompt: str) -> int:
        return int(prompt_digest(prompt)[:12], 16)

    @staticmethod
    def _extract_fenced(prompt: str) -> list[str]:
        blocks, current, inside = [], [], False
        for line in prompt.split("\n"):
            if line.strip().startswith("```"):
                if inside:
                    blocks.append("\n".join(current))
                    current = []
                inside = not inside
                continue
            if inside:
                current.append(line)
        return blocks

    def _round1(self, prompt: str) -> str:
        h = self._seed(prompt)
        name, words, verb, noun = _THEMES[h % len(_THEMES)]
        w = [words[(h >> (4 * i)) % len(words)] for i in range(4)]
        fn = f"{verb}_{noun}_{h % 97}"
        code = "\n".join(
            [
                f"def {fn}(records):",
                f"    {w[0]}_total = 0",
                "    for item in records:",
                f"        value = item.get('{w[1]}', 0)",
                f"        {w[0]}_total += value",
                f"    return {w[0]}_total",
            ]
        )
        lazy = f"{verb} {noun} {w[2]} support"
        descriptive = (
            f"Extend {fn} so that the {name} {w[2]} is tracked as well: "
            f"accumulate a second counter from each item's '{w[3]}' entry and "
            f"return both totals as a tuple instead of the single {w[0]} total."
        )
        return (
            f"{PRE_EDIT_MARKER}\n```python\n{code}\n```\n"
            f"{LAZY_MARKER}\n{lazy}\n"
            f"{DESCRIPTIVE_MARKER}\n{descriptive}\n"
        )

    def _round2(self, prompt: str) -> str:
        h = self._seed(prompt)
        if self.unreasonable_every > 0 and h % self.unreasonable_every == 0:
            return UNREASONABLE_TOKEN
        blocks = self._extract_fenced(prompt)
        pre = blocks[0] if blocks else "def placeholder():\n    return None"
        lines = pre.split("\n")
        name, words, _, _ = _THEMES[h % len(_THEMES)]
        extra = words[(h >> 8) % len(words)]
        insert_at = 1 + (h >> 16) % max(1, len(lines) - 1)
        lines.insert(insert_at, f"    {extra}_count = 0  # {name} counter")
        lines.append(f"    # tracked {extra} for {name}")
        return "Here is the edited code:\n```python\n" + "\n".join(lines) + "\n```\n"
