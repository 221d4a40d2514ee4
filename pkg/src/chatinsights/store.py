"""Event-sourced session state.

All mutation flows through apply_event: the engine never touches state
directly, so replaying events.jsonl from an empty state reproduces the
snapshot exactly, by construction. Sequence numbers are dense from 0;
gaps, duplicates, and unknown kinds are corruption errors.

Timestamps come from a logical clock (fixed epoch plus one second per
tick) so snapshot bytes are identical across replays of the same fixtures.
"""

from __future__ import annotations

import dataclasses
import json
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Callable, Iterable, Mapping, Optional

from .model import (
    ConversationTurn,
    DatasetProfile,
    Insight,
    ResponseBlock,
    Topic,
    canonical_json,
    insight_from_dict,
    insight_to_dict,
    profile_from_dict,
    profile_to_dict,
    topic_from_dict,
    topic_to_dict,
    turn_from_dict,
    turn_to_dict,
)

EVENT_KINDS = (
    "session_created",
    "dataset_ingested",
    "turn_started",
    "block_delta",
    "block_complete",
    "turn_complete",
    "turn_error",
    "diagnostic",
    "evidence_dropped",
    "insight_added",
    "insight_refined",
    "insight_evidence_degraded",
    "context_fabrication",
    "topic_regenerated",
    "topic_added",
    "topic_updated",
    "insight_organized",
    "transition_classified",
    "score_adjusted",
    "attribute_order_changed",
)

# Kinds that carry stream-only information and change no session state.
INFORMATIONAL_KINDS = (
    "block_delta",
    "diagnostic",
    "insight_evidence_degraded",
    "transition_classified",
)

CLOCK_EPOCH = datetime(2024, 1, 1, tzinfo=timezone.utc)


class CorruptionError(ValueError):
    pass


class LogicalClock:
    """Deterministic timestamps: epoch + n seconds, one per tick."""

    def __init__(self, epoch: datetime = CLOCK_EPOCH):
        self.epoch = epoch
        self.ticks = 0

    def tick(self) -> str:
        stamp = self.epoch + timedelta(seconds=self.ticks)
        self.ticks += 1
        return stamp.isoformat().replace("+00:00", "Z")


@dataclasses.dataclass(frozen=True)
class SessionEvent:
    seq: int
    kind: str
    payload: dict
    at: str

    def to_dict(self) -> dict:
        return {"seq": self.seq, "kind": self.kind, "payload": self.payload, "at": self.at}


def event_from_dict(raw: Mapping) -> SessionEvent:
    return SessionEvent(
        seq=int(raw["seq"]),
        kind=str(raw["kind"]),
        payload=dict(raw["payload"]),
        at=str(raw["at"]),
    )


class SessionState:
    """Mutable session aggregate; mutate only via apply_event."""

    def __init__(self) -> None:
        self.session_id: str = ""
        self.created_at: str = ""
        self.config: dict = {}
        self.profile: Optional[DatasetProfile] = None
        self.turns: dict[int, ConversationTurn] = {}
        self.insights: dict[str, Insight] = {}
        self.topics: dict[str, Topic] = {}
        self.attribute_order: list[str] = []
        self.counters: dict[str, int] = {
            "evidence_dropped": 0,
            "fabricated_attributes": 0,
            "topic_regenerations": 0,
        }
        self.events: list[SessionEvent] = []
        # Blocks of the turn currently streaming; completed turns only in turns.
        self.pending_turn: Optional[dict] = None

    # -- queries ---------------------------------------------------------

    def get_turn(self, turn_id: int) -> Optional[ConversationTurn]:
        return self.turns.get(turn_id)

    def get_topic(self, topic_id: str) -> Optional[Topic]:
        return self.topics.get(topic_id)

    def next_seq(self) -> int:
        return len(self.events)

    def attribute_histogram(self) -> list[tuple[str, int]]:
        counts = {name: 0 for name in self.attribute_order}
        for insight in self.insights.values():
            for name in insight.data_context.attributes:
                if name in counts:
                    counts[name] += 1
        return [(name, counts[name]) for name in self.attribute_order]


def apply_event(state: SessionState, event: SessionEvent) -> SessionState:
    """Apply one event; seq must be exactly the next dense value."""
    if event.kind not in EVENT_KINDS:
        raise CorruptionError(f"unknown event kind {event.kind!r} at seq {event.seq}")
    expected = state.next_seq()
    if event.seq != expected:
        raise CorruptionError(f"event seq {event.seq} but expected {expected}")

    p = event.payload
    if event.kind == "session_created":
        state.session_id = p["session_id"]
        state.created_at = event.at
        state.config = dict(p.get("config", {}))
    elif event.kind == "dataset_ingested":
        state.profile = profile_from_dict(p["profile"])
        state.attribute_order = list(p["attribute_order"])
    elif event.kind == "turn_started":
        state.pending_turn = {
            "turn_id": int(p["turn_id"]),
            "user_query": p["user_query"],
            "blocks": [],
        }
    elif event.kind == "block_complete":
        if state.pending_turn is None or state.pending_turn["turn_id"] != int(p["turn_id"]):
            raise CorruptionError(f"block_complete without matching turn at seq {event.seq}")
        block = p["block"]
        state.pending_turn["blocks"].append(
            ResponseBlock(
                block_index=int(block["block_index"]),
                kind=block["kind"],
                content=block["content"],
            )
        )
    elif event.kind == "turn_complete":
        if state.pending_turn is None or state.pending_turn["turn_id"] != int(p["turn_id"]):
            raise CorruptionError(f"turn_complete without matching turn at seq {event.seq}")
        turn = ConversationTurn(
            turn_id=state.pending_turn["turn_id"],
            user_query=state.pending_turn["user_query"],
            blocks=tuple(state.pending_turn["blocks"]),
            created_at=event.at,
        )
        state.turns[turn.turn_id] = turn
        state.pending_turn = None
    elif event.kind == "turn_error":
        state.pending_turn = None
    elif event.kind == "evidence_dropped":
        state.counters["evidence_dropped"] += int(p["count"])
    elif event.kind in ("insight_added", "insight_refined", "insight_organized"):
        insight = insight_from_dict(p["insight"])
        state.insights[insight.insight_id] = insight
    elif event.kind == "context_fabrication":
        state.counters["fabricated_attributes"] += len(p["attributes"])
    elif event.kind == "topic_regenerated":
        state.counters["topic_regenerations"] += 1
    elif event.kind in ("topic_added", "topic_updated"):
        topic = topic_from_dict(p["topic"])
        state.topics[topic.topic_id] = topic
    elif event.kind == "score_adjusted":
        insight_id = p["insight_id"]
        if insight_id not in state.insights:
            raise CorruptionError(f"score_adjusted for unknown insight {insight_id}")
        value = int(p["value"])
        if not 1 <= value <= 5:
            raise CorruptionError(f"score_adjusted out of range: {value}")
        old = state.insights[insight_id]
        state.insights[insight_id] = dataclasses.replace(
            old, score=dataclasses.replace(old.score, user_override=value)
        )
    elif event.kind == "attribute_order_changed":
        order = list(p["order"])
        if sorted(order) != sorted(state.attribute_order):
            raise CorruptionError("attribute_order_changed is not a permutation")
        state.attribute_order = order
    # informational kinds mutate nothing

    state.events.append(event)
    return state


def replay_events(events: Iterable[SessionEvent]) -> SessionState:
    state = SessionState()
    for event in events:
        apply_event(state, event)
    return state


def snapshot_dict(state: SessionState) -> dict:
    return {
        "session_id": state.session_id,
        "created_at": state.created_at,
        "config": state.config,
        "profile": profile_to_dict(state.profile) if state.profile else None,
        "turns": [turn_to_dict(state.turns[k]) for k in sorted(state.turns)],
        "insights": [
            insight_to_dict(i)
            for i in sorted(state.insights.values(), key=lambda x: x.created_seq)
        ],
        "topics": [topic_to_dict(state.topics[k]) for k in sorted(state.topics)],
        "attribute_order": list(state.attribute_order),
        "counters": dict(sorted(state.counters.items())),
        "events": [e.to_dict() for e in state.events],
    }


def snapshot_bytes(state: SessionState) -> bytes:
    return (canonical_json(snapshot_dict(state)) + "\n").encode("utf-8")


def events_jsonl(state: SessionState) -> bytes:
    lines = [canonical_json(e.to_dict()) for e in state.events]
    return ("\n".join(lines) + "\n" if lines else "").encode("utf-8")


def save_session(directory: str | Path, state: SessionState) -> Path:
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    (out / "snapshot.json").write_bytes(snapshot_bytes(state))
    (out / "events.jsonl").write_bytes(events_jsonl(state))
    return out


def load_events(path: str | Path) -> list[SessionEvent]:
    events = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                events.append(event_from_dict(json.loads(line)))
    return events


def load_snapshot(path: str | Path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
