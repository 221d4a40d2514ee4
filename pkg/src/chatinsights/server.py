"""HTTP facade over sessions: commands, canonical reads, and SSE fan-out.

One GET stream per session carries every SessionEvent (id = seq,
event = kind, data = payload) and is resumable from any cursor; commands
are plain HTTP. Per-session command serialization is enforced here with a
409 when a turn is already in flight.
"""

from __future__ import annotations

import asyncio
import logging
import uuid
from typing import Callable, Optional

from fastapi import FastAPI, HTTPException, Query, Request, Response
from fastapi.concurrency import run_in_threadpool
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import StreamingResponse

from .config import AppConfig
from .dataset import IngestError
from .engine import SessionEngine
from .model import canonical_json, insight_to_dict, profile_to_dict, topic_to_dict
from .store import snapshot_dict

logger = logging.getLogger(__name__)

POLL_INTERVAL_S = 0.05

EngineFactory = Callable[[str], SessionEngine]


class _SessionRecord:
    def __init__(self, engine: SessionEngine):
        self.engine = engine
        self.task: Optional[asyncio.Task] = None

    @property
    def in_flight(self) -> bool:
        return self.task is not None and not self.task.done()


def _error(status: int, code: str, message: str) -> HTTPException:
    return HTTPException(status_code=status, detail={"code": code, "message": message})


def _json_response(payload) -> Response:
    return Response(content=canonical_json(payload) + "\n", media_type="application/json")


def create_app(
    config: Optional[AppConfig] = None,
    engine_factory: Optional[EngineFactory] = None,
) -> FastAPI:
    """Build the app; tests and the CLI inject their own engine factory."""
    config = config or AppConfig()
    if engine_factory is None:
        def engine_factory(session_id: str) -> SessionEngine:
            from .executor import SubprocessExecutor
            from .gateway import HttpProvider

            return SessionEngine(
                session_id,
                HttpProvider(config.provider),
                SubprocessExecutor(timeout_s=config.executor_timeout_s),
                config=config,
            )

    app = FastAPI(title="chatinsights", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(config.cors_origins),
        allow_methods=["*"],
        allow_headers=["*"],
    )
    sessions: dict[str, _SessionRecord] = {}
    app.state.sessions = sessions

    def record_of(session_id: str) -> _SessionRecord:
        record = sessions.get(session_id)
        if record is None:
            raise _error(404, "unknown_session", f"no session {session_id!r}")
        return record

    @app.post("/sessions", status_code=201)
    async def create_session():
        session_id = uuid.uuid4().hex[:12]
        sessions[session_id] = _SessionRecord(engine_factory(session_id))
        return {"session_id": session_id}

    @app.post("/sessions/{session_id}/dataset")
    async def upload_dataset(session_id: str, request: Request):
        record = record_of(session_id)
        if record.in_flight:
            raise _error(409, "turn_in_flight", "cannot replace dataset during a turn")
        body = await request.body()
        if not body:
            raise _error(422, "empty_body", "expected CSV bytes in the request body")
        try:
            profile = await run_in_threadpool(record.engine.ingest_dataset, body, "upload")
        except IngestError as exc:
            raise _error(422, "ingest_error", str(exc))
        return _json_response(profile_to_dict(profile))

    @app.post("/sessions/{session_id}/messages", status_code=202)
    async def post_message(session_id: str, body: dict):
        record = record_of(session_id)
        text = body.get("text")
        if not isinstance(text, str) or not text.strip():
            raise _error(422, "bad_text", "body must include a non-empty 'text' string")
        if record.in_flight or record.engine.busy:
            raise _error(409, "turn_in_flight", "a turn is already being processed")
        if record.engine.state.profile is None:
            raise _error(422, "no_dataset", "upload a dataset before sending messages")

        async def run() -> None:
            try:
                await run_in_threadpool(record.engine.post_message, text)
            except Exception:
                logger.exception("turn failed for session %s", session_id)

        turn_id = record.engine.next_turn_id
        record.task = asyncio.create_task(run())
        return {"accepted": True, "turn_id": turn_id}

    @app.get("/sessions/{session_id}/events")
    async def events(session_id: str, cursor: int = Query(0, alias="from")):
        record = record_of(session_id)
        engine = record.engine

        async def stream():
            seq = max(0, cursor)
            while True:
                log = engine.state.events
                while seq < len(log):
                    event = log[seq]
                    data = canonical_json(event.payload)
                    yield f"id: {event.seq}\nevent: {event.kind}\ndata: {data}\n\n"
                    seq += 1
                await asyncio.sleep(POLL_INTERVAL_S)

        return StreamingResponse(stream(), media_type="text/event-stream")

    @app.get("/sessions/{session_id}/insights")
    async def list_insights(session_id: str):
        engine = record_of(session_id).engine
        ordered = sorted(engine.state.insights.values(), key=lambda i: i.created_seq)
        return _json_response({"insights": [insight_to_dict(i) for i in ordered]})

    @app.get("/sessions/{session_id}/topics")
    async def list_topics(session_id: str):
        engine = record_of(session_id).engine
        return _json_response(
            {"topics": [topic_to_dict(engine.state.topics[k]) for k in sorted(engine.state.topics)]}
        )

    @app.get("/sessions/{session_id}/histogram")
    async def histogram(session_id: str):
        engine = record_of(session_id).engine
        return _json_response(
            {
                "histogram": [
                    {"attribute": name, "count": count}
                    for name, count in engine.state.attribute_histogram()
                ]
            }
        )

    @app.get("/sessions/{session_id}/snapshot")
    async def snapshot(session_id: str):
        engine = record_of(session_id).engine
        return _json_response(snapshot_dict(engine.state))

    @app.patch("/sessions/{session_id}/insights/{insight_id}/score")
    async def adjust_score(session_id: str, insight_id: str, body: dict):
        engine = record_of(session_id).engine
        value = body.get("value")
        try:
            insight = engine.adjust_score(insight_id, value)
        except KeyError:
            raise _error(404, "unknown_insight", f"no insight {insight_id!r}")
        except ValueError as exc:
            raise _error(422, "bad_score", str(exc))
        return _json_response(insight_to_dict(insight))

    @app.patch("/sessions/{session_id}/attribute-order")
    async def attribute_order(session_id: str, body: dict):
        engine = record_of(session_id).engine
        order = body.get("order")
        if not isinstance(order, list) or any(not isinstance(x, str) for x in order):
            raise _error(422, "bad_order", "body must include 'order': list of attribute names")
        try:
            engine.set_attribute_order(order)
        except ValueError as exc:
            raise _error(422, "bad_order", str(exc))
        return _json_response({"attribute_order": engine.state.attribute_order})

    return app
