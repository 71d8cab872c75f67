from __future__ import annotations

import json
import random
from concurrent.futures import ThreadPoolExecutor

import httpx
import pytest

from editsynth.backends import (
    ChatCompletionClient,
    ChatTurn,
    DemoDialogueResponder,
    GenParams,
    MockBackend,
    TokenBucket,
    prompt_digest,
)
from editsynth.errors import ConfigError, ContextOverflow, RateLimited, TransportError
from editsynth.prompts import UNREASONABLE_TOKEN
from editsynth.synthesis import parse_round1, parse_round2

HISTORY = [ChatTurn("user", "hello backend")]
PARAMS = GenParams(model_id="test-model")


def ok_response(content: str = "reply") -> httpx.Response:
    return httpx.Response(200, json={"choices": [{"message": {"content": content}}]})


def make_client(handler, **kwargs) -> ChatCompletionClient:
    kwargs.setdefault("sleep", lambda s: None)
    kwargs.setdefault("jitter_rng", random.Random(0))
    return ChatCompletionClient(
        "https://api.test/v1",
        api_key="key",
        transport=httpx.MockTransport(handler),
        **kwargs,
    )


class TestGenParams:
    def test_defaults(self):
        p = GenParams(model_id="m")
        assert (p.temperature, p.top_p, p.max_tokens) == (0.8, 0.95, 2048)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"temperature": -0.1},
            {"temperature": 2.5},
            {"top_p": 0.0},
            {"top_p": 1.5},
            {"max_tokens": 0},
        ],
    )
    def test_validation(self, kwargs):
        with pytest.raises(ValueError):
            GenParams(model_id="m", **kwargs)


class TestChatTurn:
    def test_role_validation(self):
        with pytest.raises(ValueError):
            ChatTurn("narrator", "x")

    def test_empty_user_content(self):
        with pytest.raises(ValueError):
            ChatTurn("user", "")


class TestChatCompletionClient:
    def test_payload_carries_params(self):
        captured = {}

        def handler(request: httpx.Request) -> httpx.Response:
            captured.update(json.loads(request.content))
            captured["url"] = str(request.url)
            captured["auth"] = request.headers.get("authorization")
            return ok_response()

        client = make_client(handler)
        result = client.generate(HISTORY, PARAMS)
        assert captured["temperature"] == 0.8
        assert captured["top_p"] == 0.95
        assert captured["max_tokens"] == 2048
        assert captured["model"] == "test-model"
        assert captured["messages"] == [{"role": "user", "content": "hello backend"}]
        assert captured["url"].endswith("/chat/completions")
        assert captured["auth"] == "Bearer key"
        assert result.text == "reply"
        assert result.retries_used == 0

    def test_retries_then_succeeds(self):
        calls = {"n": 0}

        def handler(request: httpx.Request) -> httpx.Response:
            calls["n"] += 1
            if calls["n"] <= 2:
                return httpx.Response(500, text="boom")
            return ok_response("finally")

        client = make_client(handler, max_retries=3)
        result = client.generate(HISTORY, PARAMS)
        assert result.text == "finally"
        assert result.retries_used == 2
        assert calls["n"] == 3

    def test_rate_limit_exhausts(self):
        calls = {"n": 0}

        def handler(request: httpx.Request) -> httpx.Response:
            calls["n"] += 1
            return httpx.Response(429, text="slow down")

        client = make_client(handler, max_retries=3)
        with pytest.raises(RateLimited):
            client.generate(HISTORY, PARAMS)
        assert calls["n"] == 4  # initial attempt + 3 retries

    def test_context_overflow_not_retried(self):
        calls = {"n": 0}

        def handler(request: httpx.Request) -> httpx.Response:
            calls["n"] += 1
            return httpx.Response(400, text="maximum context length exceeded")

        client = make_client(handler, max_retries=3)
        with pytest.raises(ContextOverflow):
            client.generate(HISTORY, PARAMS)
        assert calls["n"] == 1

    def test_client_error_not_retried(self):
        calls = {"n": 0}

        def handler(request: httpx.Request) -> httpx.Response:
            calls["n"] += 1
            return httpx.Response(403, text="forbidden")

        client = make_client(handler, max_retries=3)
        with pytest.raises(TransportError):
            client.generate(HISTORY, PARAMS)
        assert calls["n"] == 1

    def test_backoff_delays_grow(self):
        sleeps: list[float] = []

        def handler(request: httpx.Request) -> httpx.Response:
            return httpx.Response(500)

        client = make_client(
            handler,
            max_retries=3,
            sleep=sleeps.append,
            jitter_rng=random.Random(1),
        )
        with pytest.raises(TransportError):
            client.generate(HISTORY, PARAMS)
        assert len(sleeps) == 3
        # jittered delays stay inside [0, base * factor**attempt)
        for attempt, delay in enumerate(sleeps):
            assert 0 <= delay < 1.0 * 2**attempt

    def test_history_not_mutated(self):
        history = [ChatTurn("user", "round one"), ChatTurn("assistant", "ok"),
                   ChatTurn("user", "round two")]
        snapshot = list(history)
        client = make_client(lambda request: ok_response())
        client.generate(history, PARAMS)
        assert history == snapshot

    def test_history_must_end_with_user(self):
        client = make_client(lambda request: ok_response())
        with pytest.raises(ValueError):
            client.generate([ChatTurn("assistant", "x")], PARAMS)

    def test_missing_key_is_config_error(self, monkeypatch):
        monkeypatch.delenv("OCE_API_KEY", raising=False)
        with pytest.raises(ConfigError):
            ChatCompletionClient("https://api.test/v1")


class TestMockBackend:
    def test_scripted_response(self):
        script = {prompt_digest("hello backend"): "canned"}
        backend = MockBackend(script)
        assert backend.generate(HISTORY, PARAMS).text == "canned"

    def test_unscripted_falls_back(self):
        backend = MockBackend({}, fallback=UNREASONABLE_TOKEN)
        assert backend.generate(HISTORY, PARAMS).text == UNREASONABLE_TOKEN

    def test_callable_fallback(self):
        backend = MockBackend({}, fallback=lambda prompt: prompt.upper())
        assert backend.generate(HISTORY, PARAMS).text == "HELLO BACKEND"

    def test_concurrent_determinism(self):
        backend = MockBackend({prompt_digest("hello backend"): "stable"})
        with ThreadPoolExecutor(max_workers=16) as pool:
            results = list(pool.map(lambda _: backend.generate(HISTORY, PARAMS).text,
                                    range(1000)))
        assert results == ["stable"] * 1000


class TestTokenBucket:
    def test_disabled_when_zero(self):
        bucket = TokenBucket(0)
        for _ in range(100):
            bucket.acquire()  # never blocks

    def test_paces_requests(self):
        clock = {"t": 0.0}
        sleeps: list[float] = []

        def fake_sleep(seconds: float) -> None:
            sleeps.append(seconds)
            clock["t"] += seconds

        bucket = TokenBucket(60, clock=lambda: clock["t"], sleep=fake_sleep)
        bucket.acquire()  # initial token available
        bucket.acquire()  # must wait ~1s at 60 rpm
        assert sleeps and abs(sum(sleeps) - 1.0) < 1e-6


class TestDemoDialogueResponder:
    def test_round1_output_parses(self):
        responder = DemoDialogueResponder()
        task = parse_round1(responder("prompt with two snippets"))
        assert task.pre_edit and task.instruction_lazy and task.instruction_descriptive

    def test_round2_output_parses(self):
        responder = DemoDialogueResponder(unreasonable_every=0)
        round2_prompt = (
            f"pre-edit:\n```\ndef f():\n    return 1\n```\nreply {UNREASONABLE_TOKEN} if bad"
        )
        post = parse_round2(responder(round2_prompt))
        assert post is not None and "def f():" in post

    def test_deterministic(self):
        responder = DemoDialogueResponder()
        assert responder("same prompt") == responder("same prompt")
