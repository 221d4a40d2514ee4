"""Insight extraction agent: parses turn-level insight deltas.

After each completed turn the agent is prompted with key-term definitions,
the dataset schema, few-shot examples, its memory of prior insights, and
the turn itself. The structured reply is a JSON array of delta records,
either identifying a new insight or refining an existing one. Replies that
fail schema validation trigger bounded repair re-prompts.

Evidence binding is strict: every reference must resolve verbatim against
the stored turn blocks, failing refs are dropped and counted, and an
insight whose refs all drop is kept but flagged as evidence-degraded.
"""

from __future__ import annotations

import json
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from . import prompts
from .gateway import ChatMessage, ChatRequest
from .model import (
    EVIDENCE_KIND_FOR_BLOCK,
    INSIGHT_CATEGORIES,
    ConversationTurn,
    DatasetProfile,
    EvidenceRef,
)

logger = logging.getLogger(__name__)

REPAIR_LIMIT = 2
MEMORY_BUDGET = 50
DIGEST_CHARS = 60

REPAIR_PROMPT = (
    "Your previous reply was not valid. Reply again with only a JSON array "
    "of delta objects in the required schema (or [] for no insights)."
)


class DeltaSchemaError(ValueError):
    pass


@dataclass(frozen=True)
class RawEvidence:
    turn_id: int
    block_index: int
    quote: Optional[str] = None
    char_range: Optional[tuple[int, int]] = None


@dataclass(frozen=True)
class InsightDelta:
    action: str  # identify_new | refine_existing
    summary: str
    evidence: tuple[RawEvidence, ...]
    category_votes: tuple[str, ...]
    target: Optional[str] = None


@dataclass(frozen=True)
class BoundEvidence:
    accepted: tuple[EvidenceRef, ...]
    dropped: int

    @property
    def degraded(self) -> bool:
        return len(self.accepted) == 0


@dataclass
class MemoryEntry:
    insight_id: str
    summary: str
    s_sem: int


class AgentMemory:
    """Prior insights fed back into the agent prompt, oldest first.

    Entries beyond the budget are not forgotten; they collapse to one
    digest line each so the prompt stays bounded.
    """

    def __init__(self, budget: int = MEMORY_BUDGET):
        self.budget = budget
        self.entries: list[MemoryEntry] = []

    def remember(self, insight_id: str, summary: str, s_sem: int) -> None:
        for entry in self.entries:
            if entry.insight_id == insight_id:
                entry.summary = summary
                entry.s_sem = s_sem
                return
        self.entries.append(MemoryEntry(insight_id, summary, s_sem))

    def render(self) -> str:
        if not self.entries:
            return "(none yet)"
        lines = []
        overflow = max(0, len(self.entries) - self.budget)
        for i, entry in enumerate(self.entries):
            if i < overflow:
                clipped = entry.summary[:DIGEST_CHARS]
                if len(entry.summary) > DIGEST_CHARS:
                    clipped += "..."
                lines.append(f"{entry.insight_id}: {clipped}")
            else:
                lines.append(f"{entry.insight_id} [s_sem {entry.s_sem}]: {entry.summary}")
        return "\n".join(lines)

    def prior_scores(self) -> str:
        if not self.entries:
            return "(none yet)"
        return "\n".join(f"{e.insight_id}: {e.s_sem}" for e in self.entries)


def render_turn(turn: ConversationTurn) -> str:
    lines = [f"User query: {turn.user_query}"]
    for block in turn.blocks:
        lines.append(f"[block {block.block_index}] ({block.kind})")
        lines.append(block.content)
    return "\n".join(lines)


_FENCED_JSON = re.compile(r"```(?:json)?\s*\n(.*?)\n\s*```", re.DOTALL)


def _strip_fences(text: str) -> str:
    match = _FENCED_JSON.search(text)
    return match.group(1) if match else text


def parse_delta_reply(text: str) -> list[InsightDelta]:
    """Validate a raw agent reply into deltas; raises DeltaSchemaError."""
    try:
        payload = json.loads(_strip_fences(text).strip())
    except json.JSONDecodeError as exc:
        raise DeltaSchemaError(f"reply is not JSON: {exc}") from exc
    if not isinstance(payload, list):
        raise DeltaSchemaError("reply must be a JSON array")

    deltas = []
    for i, item in enumerate(payload):
        if not isinstance(item, dict):
            raise DeltaSchemaError(f"delta {i} is not an object")
        action = item.get("action")
        if action not in ("identify_new", "refine_existing"):
            raise DeltaSchemaError(f"delta {i} has bad action {action!r}")
        target = item.get("target")
        if action == "refine_existing":
            if not isinstance(target, str) or not target:
                raise DeltaSchemaError(f"delta {i} refines without a target id")
        elif target:
            raise DeltaSchemaError(f"delta {i} is identify_new but names a target")
        summary = item.get("summary")
        if not isinstance(summary, str) or not summary.strip():
            raise DeltaSchemaError(f"delta {i} has no summary")

        votes_raw = item.get("category_votes", [])
        if not isinstance(votes_raw, list) or any(not isinstance(v, str) for v in votes_raw):
            raise DeltaSchemaError(f"delta {i} category_votes must be a list of strings")
        votes = tuple(v for v in votes_raw if v in INSIGHT_CATEGORIES)
        if not votes:
            votes = ("other",)

        evidence = []
        refs_raw = item.get("evidence", [])
        if not isinstance(refs_raw, list):
            raise DeltaSchemaError(f"delta {i} evidence must be a list")
        for j, ref in enumerate(refs_raw):
            if not isinstance(ref, dict):
                raise DeltaSchemaError(f"delta {i} evidence {j} is not an object")
            try:
                turn_id = int(ref["turn_id"])
                block_index = int(ref["block_index"])
            except (KeyError, TypeError, ValueError) as exc:
                raise DeltaSchemaError(
                    f"delta {i} evidence {j} needs integer turn_id and block_index"
                ) from exc
            quote = ref.get("quote")
            if quote is not None and not isinstance(quote, str):
                raise DeltaSchemaError(f"delta {i} evidence {j} quote must be a string")
            char_range = None
            if ref.get("char_range") is not None:
                cr = ref["char_range"]
                if (
                    not isinstance(cr, (list, tuple))
                    or len(cr) != 2
                    or any(not isinstance(x, int) for x in cr)
                ):
                    raise DeltaSchemaError(f"delta {i} evidence {j} char_range must be [start, end]")
                char_range = (cr[0], cr[1])
            evidence.append(
                RawEvidence(
                    turn_id=turn_id,
                    block_index=block_index,
                    quote=quote,
                    char_range=char_range,
                )
            )
        deltas.append(
            InsightDelta(
                action=action,
                summary=summary.strip(),
                evidence=tuple(evidence),
                category_votes=votes,
                target=target if action == "refine_existing" else None,
            )
        )
    return deltas


def build_extraction_prompt(
    turn: ConversationTurn, memory: AgentMemory, profile: DatasetProfile
) -> str:
    return prompts.render(
        "ie_agent",
        dataset=profile.nl_description,
        few_shots=prompts.load("ie_few_shots"),
        memory=memory.render(),
        turn_id=str(turn.turn_id),
        turn=render_turn(turn),
    )


def extract_deltas(
    provider,
    turn: ConversationTurn,
    memory: AgentMemory,
    profile: DatasetProfile,
) -> tuple[list[InsightDelta], list[str]]:
    """Run the extraction exchange; (deltas, diagnostics).

    Schema failures re-prompt up to REPAIR_LIMIT times; a still-bad reply
    yields zero deltas plus a diagnostic instead of an exception. Provider
    failures propagate to the caller (the turn stays retriable).
    """
    notes: list[str] = []
    messages = [ChatMessage(role="user", content=build_extraction_prompt(turn, memory, profile))]
    for attempt in range(1 + REPAIR_LIMIT):
        response = provider.complete(ChatRequest(channel="ie_agent", messages=tuple(messages)))
        try:
            return parse_delta_reply(response.content), notes
        except DeltaSchemaError as exc:
            notes.append(f"extraction reply attempt {attempt + 1} invalid: {exc}")
            messages.append(ChatMessage(role="assistant", content=response.content))
            messages.append(ChatMessage(role="user", content=REPAIR_PROMPT))
    notes.append("extraction abandoned after repair limit; turn yields no deltas")
    return [], notes


def bind_evidence(
    delta: InsightDelta, get_turn: Callable[[int], Optional[ConversationTurn]]
) -> BoundEvidence:
    """Resolve raw refs verbatim against stored turns; drop what fails."""
    accepted: list[EvidenceRef] = []
    seen = set()
    dropped = 0
    for raw in delta.evidence:
        turn = get_turn(raw.turn_id)
        if turn is None or not (0 <= raw.block_index < len(turn.blocks)):
            dropped += 1
            continue
        block = turn.blocks[raw.block_index]
        kind = EVIDENCE_KIND_FOR_BLOCK[block.kind]
        char_range = raw.char_range
        if raw.quote is not None:
            if not raw.quote:
                dropped += 1
                continue
            start = block.content.find(raw.quote)
            if start < 0:
                dropped += 1
                continue
            char_range = (start, start + len(raw.quote))
        elif char_range is not None:
            start, end = char_range
            if not (0 <= start < end <= len(block.content)):
                dropped += 1
                continue
        ref = EvidenceRef(
            turn_id=raw.turn_id,
            block_index=raw.block_index,
            evidence_kind=kind,
            char_range=char_range,
        )
        if ref.key() in seen:
            continue  # set-union semantics: duplicates are no-ops, not drops
        seen.add(ref.key())
        accepted.append(ref)
    return BoundEvidence(accepted=tuple(accepted), dropped=dropped)


def merge_evidence(
    existing: Sequence[EvidenceRef], incoming: Sequence[EvidenceRef]
) -> tuple[EvidenceRef, ...]:
    merged = list(existing)
    seen = {ref.key() for ref in existing}
    for ref in incoming:
        if ref.key() not in seen:
            seen.add(ref.key())
            merged.append(ref)
    return tuple(merged)


def majority_vote(votes: Sequence[str]) -> str:
    """Most common category; ties break toward the earliest-listed vote."""
    if not votes:
        return "other"
    counts = Counter(votes)
    best = max(counts.values())
    for vote in votes:
        if counts[vote] == best:
            return vote
    return "other"  # unreachable; votes is non-empty
