"""Chat-completion and embedding providers.

Two implementations share one surface: an HTTP client speaking the
chat-completions JSON schema, and a scripted provider that replays fixture
files for fully deterministic runs. Every live exchange can be recorded
into a transcript that is itself a loadable fixture, so any session is
replayable after the fact.

Fixture file shape::

    {"chat": {"<channel>": [entry, ...]}, "embeddings": {"<text>": [floats]}}

where an entry is either a plain string (the content) or an object with
optional ``content``, ``chunks``, ``tool_calls``, and ``finish_reason``.
"""

from __future__ import annotations

import json
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Mapping, Optional, Sequence

import httpx

CHANNELS = ("analysis", "ie_agent", "io_agent", "semantic_score")

StreamSink = Callable[[str], None]


class GatewayError(Exception):
    def __init__(self, message: str, channel: str = "", attempts: int = 0):
        super().__init__(message)
        self.channel = channel
        self.attempts = attempts


class FixtureExhaustedError(GatewayError):
    pass


class MissingEmbeddingError(GatewayError):
    pass


@dataclass(frozen=True)
class ChatMessage:
    role: str  # system | user | assistant | tool
    content: str


@dataclass(frozen=True)
class ToolCall:
    name: str
    arguments: dict


@dataclass(frozen=True)
class ChatRequest:
    channel: str
    messages: tuple[ChatMessage, ...]
    tools: tuple[dict, ...] = ()
    temperature: float = 0.0

    def __post_init__(self):
        if self.channel not in CHANNELS:
            raise ValueError(f"unknown channel {self.channel!r}")
        if not self.messages:
            raise ValueError("request needs at least one message")


@dataclass(frozen=True)
class ChatResponse:
    content: str
    tool_calls: tuple[ToolCall, ...] = ()
    finish_reason: str = "stop"


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple[float, ...]
    source_text: str


def cosine_similarity(u: EmbeddingVector, v: EmbeddingVector) -> float:
    if len(u.values) != len(v.values):
        raise ValueError(
            f"dimension mismatch: {len(u.values)} vs {len(v.values)}"
        )
    dot = sum(a * b for a, b in zip(u.values, v.values))
    nu = math.sqrt(sum(a * a for a in u.values))
    nv = math.sqrt(sum(b * b for b in v.values))
    if nu == 0 or nv == 0:
        raise ValueError("cosine similarity undefined for zero vector")
    return dot / (nu * nv)


def _normalize_entry(entry: Any) -> dict:
    if isinstance(entry, str):
        return {"content": entry, "chunks": None, "tool_calls": [], "finish_reason": "stop"}
    if isinstance(entry, Mapping):
        chunks = entry.get("chunks")
        content = entry.get("content")
        if content is None and chunks is not None:
            content = "".join(chunks)
        if chunks is not None and content != "".join(chunks):
            raise ValueError("fixture entry chunks do not concatenate to content")
        return {
            "content": content or "",
            "chunks": list(chunks) if chunks is not None else None,
            "tool_calls": list(entry.get("tool_calls", [])),
            "finish_reason": entry.get("finish_reason", "stop"),
        }
    raise ValueError(f"bad fixture entry: {entry!r}")


class ScriptedProvider:
    """Replays fixture responses FIFO per channel; embeddings keyed by text."""

    def __init__(self, fixture: Mapping):
        chat = fixture.get("chat", {})
        for channel in chat:
            if channel not in CHANNELS:
                raise ValueError(f"fixture has unknown channel {channel!r}")
        self._queues: dict[str, list[dict]] = {
            ch: [_normalize_entry(e) for e in entries] for ch, entries in chat.items()
        }
        self._cursor: dict[str, int] = {ch: 0 for ch in self._queues}
        self._embeddings: dict[str, tuple[float, ...]] = {}
        dims = set()
        for text, vec in fixture.get("embeddings", {}).items():
            values = tuple(float(x) for x in vec)
            dims.add(len(values))
            self._embeddings[text] = values
        if len(dims) > 1:
            raise ValueError(f"embedding fixture mixes dimensions: {sorted(dims)}")

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedProvider":
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh))

    def complete(self, request: ChatRequest, stream_sink: Optional[StreamSink] = None) -> ChatResponse:
        queue = self._queues.get(request.channel, [])
        pos = self._cursor.get(request.channel, 0)
        if pos >= len(queue):
            raise FixtureExhaustedError(
                f"fixture exhausted: channel {request.channel}",
                channel=request.channel,
            )
        self._cursor[request.channel] = pos + 1
        entry = queue[pos]
        if stream_sink is not None:
            for chunk in entry["chunks"] if entry["chunks"] is not None else [entry["content"]]:
                if chunk:
                    stream_sink(chunk)
        return ChatResponse(
            content=entry["content"],
            tool_calls=tuple(
                ToolCall(name=c["name"], arguments=dict(c.get("arguments", {})))
                for c in entry["tool_calls"]
            ),
            finish_reason=entry["finish_reason"],
        )

    def embed(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        if not texts:
            raise ValueError("embed requires at least one text")
        out = []
        for text in texts:
            if text not in self._embeddings:
                raise MissingEmbeddingError(f"missing embedding fixture for text: {text!r}")
            out.append(EmbeddingVector(values=self._embeddings[text], source_text=text))
        return out

    def remaining(self) -> dict[str, int]:
        return {ch: len(q) - self._cursor.get(ch, 0) for ch, q in self._queues.items()}


@dataclass
class ProviderSettings:
    endpoint: str = "https://api.openai.com/v1"
    chat_model: str = "gpt-4-0125-preview"
    embedding_model: str = "text-embedding-3-small"
    api_key_env: str = "OPENAI_API_KEY"
    timeout_s: float = 120.0
    retries: int = 2


class HttpProvider:
    """Chat-completions client with bounded retries and streaming support."""

    RETRYABLE_STATUS = {408, 409, 429, 500, 502, 503, 504}

    def __init__(self, settings: ProviderSettings, client: Optional[httpx.Client] = None):
        self.settings = settings
        self._client = client or httpx.Client(timeout=settings.timeout_s)

    def _headers(self) -> dict:
        key = os.environ.get(self.settings.api_key_env, "")
        headers = {"Content-Type": "application/json"}
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def _request_with_retries(self, channel: str, send: Callable[[], Any]) -> Any:
        attempts = 0
        delay = 0.5
        while True:
            attempts += 1
            try:
                return send()
            except (httpx.TransportError, httpx.TimeoutException) as exc:
                if attempts > self.settings.retries:
                    raise GatewayError(
                        f"transport failure on channel {channel}: {exc}",
                        channel=channel,
                        attempts=attempts,
                    ) from exc
            except httpx.HTTPStatusError as exc:
                if (
                    exc.response.status_code not in self.RETRYABLE_STATUS
                    or attempts > self.settings.retries
                ):
                    raise GatewayError(
                        f"provider error {exc.response.status_code} on channel {channel}",
                        channel=channel,
                        attempts=attempts,
                    ) from exc
            time.sleep(delay)
            delay *= 2

    def complete(self, request: ChatRequest, stream_sink: Optional[StreamSink] = None) -> ChatResponse:
        payload: dict[str, Any] = {
            "model": self.settings.chat_model,
            "temperature": request.temperature,
            "messages": [{"role": m.role, "content": m.content} for m in request.messages],
        }
        if request.tools:
            payload["tools"] = list(request.tools)
        url = f"{self.settings.endpoint.rstrip('/')}/chat/completions"

        if stream_sink is None:
            def send() -> ChatResponse:
                resp = self._client.post(url, json=payload, headers=self._headers())
                resp.raise_for_status()
                return _parse_completion(resp.json())

            return self._request_with_retries(request.channel, send)

        def send_stream() -> ChatResponse:
            parts: list[str] = []
            finish = "stop"
            with self._client.stream(
                "POST", url, json={**payload, "stream": True}, headers=self._headers()
            ) as resp:
                resp.raise_for_status()
                for line in resp.iter_lines():
                    if not line.startswith("data:"):
                        continue
                    data = line[5:].strip()
                    if data == "[DONE]":
                        break
                    event = json.loads(data)
                    choice = (event.get("choices") or [{}])[0]
                    delta = (choice.get("delta") or {}).get("content")
                    if delta:
                        parts.append(delta)
                        stream_sink(delta)
                    finish = choice.get("finish_reason") or finish
            return ChatResponse(content="".join(parts), finish_reason=finish)

        return self._request_with_retries(request.channel, send_stream)

    def embed(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        if not texts:
            raise ValueError("embed requires at least one text")
        url = f"{self.settings.endpoint.rstrip('/')}/embeddings"
        payload = {"model": self.settings.embedding_model, "input": list(texts)}

        def send():
            resp = self._client.post(url, json=payload, headers=self._headers())
            resp.raise_for_status()
            return resp.json()

        body = self._request_with_retries("analysis", send)
        rows = sorted(body.get("data", []), key=lambda r: r.get("index", 0))
        return [
            EmbeddingVector(values=tuple(float(x) for x in row["embedding"]), source_text=text)
            for row, text in zip(rows, texts)
        ]


def _parse_completion(body: Mapping) -> ChatResponse:
    choice = (body.get("choices") or [{}])[0]
    message = choice.get("message") or {}
    calls = []
    for call in message.get("tool_calls") or []:
        fn = call.get("function", {})
        try:
            args = json.loads(fn.get("arguments", "{}"))
        except json.JSONDecodeError:
            args = {"raw": fn.get("arguments", "")}
        calls.append(ToolCall(name=fn.get("name", ""), arguments=args))
    content = message.get("content") or ""
    if not content and not calls:
        raise GatewayError("provider returned neither content nor tool calls")
    return ChatResponse(
        content=content,
        tool_calls=tuple(calls),
        finish_reason=choice.get("finish_reason") or "stop",
    )


class RecordingProvider:
    """Wraps a provider and appends every exchange to a replayable fixture."""

    def __init__(self, inner):
        self._inner = inner
        self._chat: dict[str, list] = {}
        self._embeddings: dict[str, list[float]] = {}

    def complete(self, request: ChatRequest, stream_sink: Optional[StreamSink] = None) -> ChatResponse:
        chunks: list[str] = []

        def tap(delta: str) -> None:
            chunks.append(delta)
            if stream_sink is not None:
                stream_sink(delta)

        response = self._inner.complete(request, tap if stream_sink is not None else None)
        entry: dict[str, Any] = {"content": response.content}
        if chunks:
            entry["chunks"] = chunks
        if response.tool_calls:
            entry["tool_calls"] = [
                {"name": c.name, "arguments": c.arguments} for c in response.tool_calls
            ]
        self._chat.setdefault(request.channel, []).append(entry)
        return response

    def embed(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        vectors = self._inner.embed(texts)
        for vec in vectors:
            self._embeddings[vec.source_text] = list(vec.values)
        return vectors

    def fixture(self) -> dict:
        return {"chat": self._chat, "embeddings": self._embeddings}

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.fixture(), indent=2, sort_keys=True), encoding="utf-8")
