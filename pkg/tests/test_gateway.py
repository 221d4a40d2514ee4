"""Provider plumbing: scripted replay, recording, HTTP client behavior."""

from __future__ import annotations

import json

import httpx
import pytest

import chatinsights.gateway as gateway
from chatinsights.gateway import (
    ChatMessage,
    ChatRequest,
    EmbeddingVector,
    FixtureExhaustedError,
    GatewayError,
    HttpProvider,
    MissingEmbeddingError,
    ProviderSettings,
    RecordingProvider,
    ScriptedProvider,
    cosine_similarity,
)


def req(channel: str = "analysis", text: str = "hi") -> ChatRequest:
    return ChatRequest(channel=channel, messages=(ChatMessage("user", text),))


class TestChatRequest:
    def test_unknown_channel_rejected(self):
        with pytest.raises(ValueError):
            ChatRequest(channel="mystery", messages=(ChatMessage("user", "x"),))

    def test_empty_messages_rejected(self):
        with pytest.raises(ValueError):
            ChatRequest(channel="analysis", messages=())


class TestCosine:
    def test_known_value(self):
        u = EmbeddingVector((1.0, 0.0), "u")
        v = EmbeddingVector((0.6, 0.8), "v")
        assert abs(cosine_similarity(u, v) - 0.6) < 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension"):
            cosine_similarity(EmbeddingVector((1.0,), "u"), EmbeddingVector((1.0, 0.0), "v"))

    def test_zero_vector(self):
        with pytest.raises(ValueError, match="zero"):
            cosine_similarity(EmbeddingVector((0.0, 0.0), "u"), EmbeddingVector((1.0, 0.0), "v"))


class TestScriptedProvider:
    def fixture(self) -> dict:
        return {
            "chat": {
                "analysis": ["first", {"content": "abcdef", "chunks": ["abc", "def"]}],
                "ie_agent": ["[]"],
            },
            "embeddings": {"hello": [0.0, 1.0]},
        }

    def test_fifo_per_channel(self):
        provider = ScriptedProvider(self.fixture())
        assert provider.complete(req()).content == "first"
        assert provider.complete(req()).content == "abcdef"
        assert provider.complete(req("ie_agent")).content == "[]"

    def test_streams_chunks_to_sink(self):
        provider = ScriptedProvider(self.fixture())
        provider.complete(req())
        seen: list[str] = []
        response = provider.complete(req(), stream_sink=seen.append)
        assert seen == ["abc", "def"]
        assert response.content == "abcdef"

    def test_unchunked_entry_streams_whole_content(self):
        provider = ScriptedProvider(self.fixture())
        seen: list[str] = []
        provider.complete(req(), stream_sink=seen.append)
        assert "".join(seen) == "first"

    def test_exhaustion_error_names_channel(self):
        provider = ScriptedProvider(self.fixture())
        provider.complete(req("ie_agent"))
        with pytest.raises(FixtureExhaustedError) as err:
            provider.complete(req("ie_agent"))
        assert "fixture exhausted: channel ie_agent" in str(err.value)

    def test_chunks_must_concatenate_to_content(self):
        bad = {"chat": {"analysis": [{"content": "xy", "chunks": ["x", "z"]}]}}
        with pytest.raises(ValueError, match="concatenate"):
            ScriptedProvider(bad)

    def test_embed_exact_text_match_only(self):
        provider = ScriptedProvider(self.fixture())
        [vec] = provider.embed(["hello"])
        assert vec.values == (0.0, 1.0)
        with pytest.raises(MissingEmbeddingError):
            provider.embed(["hello "])

    def test_remaining_counts(self):
        provider = ScriptedProvider(self.fixture())
        provider.complete(req())
        assert provider.remaining()["analysis"] == 1


class TestRecordingProvider:
    def test_record_then_replay_closure(self):
        inner = ScriptedProvider(
            {
                "chat": {"analysis": [{"content": "ab", "chunks": ["a", "b"]}, "two"]},
                "embeddings": {"t": [1.0, 0.0]},
            }
        )
        recorder = RecordingProvider(inner)
        seen: list[str] = []
        recorder.complete(req(), stream_sink=seen.append)
        recorder.complete(req())
        recorder.embed(["t"])

        replayed = ScriptedProvider(recorder.fixture())
        seen2: list[str] = []
        assert replayed.complete(req(), stream_sink=seen2.append).content == "ab"
        assert seen2 == seen == ["a", "b"]
        assert replayed.complete(req()).content == "two"
        assert replayed.embed(["t"])[0].values == (1.0, 0.0)


def mock_provider(handler, retries: int = 2) -> HttpProvider:
    settings = ProviderSettings(endpoint="https://llm.test/v1", retries=retries)
    client = httpx.Client(transport=httpx.MockTransport(handler))
    return HttpProvider(settings, client=client)


class TestHttpProvider:
    def test_parses_chat_completion(self):
        def handler(request: httpx.Request) -> httpx.Response:
            body = json.loads(request.content)
            assert body["messages"][0]["content"] == "hi"
            return httpx.Response(
                200,
                json={"choices": [{"message": {"content": "pong"}, "finish_reason": "stop"}]},
            )

        assert mock_provider(handler).complete(req()).content == "pong"

    def test_retries_transient_500_then_succeeds(self, monkeypatch):
        monkeypatch.setattr(gateway.time, "sleep", lambda s: None)
        calls = {"n": 0}

        def handler(request: httpx.Request) -> httpx.Response:
            calls["n"] += 1
            if calls["n"] == 1:
                return httpx.Response(500, json={})
            return httpx.Response(200, json={"choices": [{"message": {"content": "ok"}}]})

        assert mock_provider(handler).complete(req()).content == "ok"
        assert calls["n"] == 2

    def test_non_retryable_status_fails_fast(self, monkeypatch):
        monkeypatch.setattr(gateway.time, "sleep", lambda s: None)
        calls = {"n": 0}

        def handler(request: httpx.Request) -> httpx.Response:
            calls["n"] += 1
            return httpx.Response(401, json={})

        with pytest.raises(GatewayError, match="401"):
            mock_provider(handler).complete(req())
        assert calls["n"] == 1

    def test_retry_budget_exhausted(self, monkeypatch):
        monkeypatch.setattr(gateway.time, "sleep", lambda s: None)

        def handler(request: httpx.Request) -> httpx.Response:
            return httpx.Response(503, json={})

        with pytest.raises(GatewayError) as err:
            mock_provider(handler, retries=1).complete(req())
        assert err.value.attempts == 2

    def test_streaming_sse_lines(self):
        sse = (
            'data: {"choices":[{"delta":{"content":"he"}}]}\n\n'
            'data: {"choices":[{"delta":{"content":"llo"},"finish_reason":"stop"}]}\n\n'
            "data: [DONE]\n\n"
        )

        def handler(request: httpx.Request) -> httpx.Response:
            assert json.loads(request.content)["stream"] is True
            return httpx.Response(200, content=sse.encode("utf-8"))

        seen: list[str] = []
        response = mock_provider(handler).complete(req(), stream_sink=seen.append)
        assert seen == ["he", "llo"]
        assert response.content == "hello"

    def test_embeddings_ordered_by_index(self):
        def handler(request: httpx.Request) -> httpx.Response:
            return httpx.Response(
                200,
                json={
                    "data": [
                        {"index": 1, "embedding": [0.0, 1.0]},
                        {"index": 0, "embedding": [1.0, 0.0]},
                    ]
                },
            )

        vecs = mock_provider(handler).embed(["a", "b"])
        assert vecs[0].values == (1.0, 0.0)
        assert vecs[0].source_text == "a"
        assert vecs[1].values == (0.0, 1.0)

    def test_empty_reply_rejected(self):
        def handler(request: httpx.Request) -> httpx.Response:
            return httpx.Response(200, json={"choices": [{"message": {}}]})

        with pytest.raises(GatewayError, match="neither content nor tool calls"):
            mock_provider(handler).complete(req())
