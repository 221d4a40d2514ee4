"""Shared domain types, validation, and canonical JSON serialization.

Everything here is an immutable value with no I/O: types may be freely
shared between threads and sessions. Canonical JSON is the single wire
format used by the API, the snapshot files, and the golden tests, so the
encoder pins every source of nondeterminism (key order, float digits).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any, Iterable, Mapping, Optional, Sequence

ATTRIBUTE_KINDS = ("numeric", "categorical", "temporal", "boolean", "text")
BLOCK_KINDS = ("text", "code", "code_output", "visualization")
EVIDENCE_KINDS = ("code", "code_output", "visualization", "nl_explanation")
INSIGHT_CATEGORIES = (
    "extremum",
    "trend",
    "correlation",
    "distribution",
    "outlier",
    "proportion",
    "difference",
    "other",
)
ACTION_KINDS = ("filter", "aggregation", "sort", "derive", "join", "bin")
TRANSITIONS = ("initial", "continue", "retain", "shift")
TOPIC_PROVENANCES = ("generated", "selected_only")

SUMMARY_MAX_CHARS = 400

# Block kind -> the evidence kind a reference to that block must carry.
EVIDENCE_KIND_FOR_BLOCK = {
    "text": "nl_explanation",
    "code": "code",
    "code_output": "code_output",
    "visualization": "visualization",
}


def final_score(s_sem: int, s_stat: int, omega: float | Fraction = Fraction(3, 5)) -> int:
    """Weighted combination of semantic and statistical scores.

    round-half-up of ``s_sem * omega + s_stat * (1 - omega)``, clamped to
    [1, 5]. Arithmetic is exact (Fraction), so results never depend on
    binary float representation of the weight.
    """
    w = omega if isinstance(omega, Fraction) else Fraction(str(omega))
    if not 0 <= w <= 1:
        raise ValueError(f"omega must be in [0, 1], got {w}")
    value = Fraction(s_sem) * w + Fraction(s_stat) * (1 - w)
    rounded = math.floor(value + Fraction(1, 2))
    return max(1, min(5, rounded))


# ---------------------------------------------------------------------------
# Dataset types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Attribute:
    name: str
    kind: str
    null_count: int = 0


@dataclass(frozen=True)
class DatasetProfile:
    name: str
    attributes: tuple[Attribute, ...]
    row_count: int
    preview_rows: tuple[tuple[str, ...], ...]
    nl_description: str

    def attribute_names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.attributes)

    def kind_of(self, name: str) -> str:
        for a in self.attributes:
            if a.name == name:
                return a.kind
        raise KeyError(name)


# ---------------------------------------------------------------------------
# Conversation types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ResponseBlock:
    block_index: int
    kind: str
    content: str


@dataclass(frozen=True)
class ConversationTurn:
    turn_id: int
    user_query: str
    blocks: tuple[ResponseBlock, ...]
    created_at: str


@dataclass(frozen=True)
class EvidenceRef:
    turn_id: int
    block_index: int
    evidence_kind: str
    char_range: Optional[tuple[int, int]] = None

    def key(self) -> tuple:
        return (self.turn_id, self.block_index, self.char_range)


# ---------------------------------------------------------------------------
# Insight types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InterestingnessScore:
    s_sem: int
    s_stat: int
    s_final: int
    rationale: str
    weight_omega: float = 0.6
    user_override: Optional[int] = None

    @property
    def display_score(self) -> int:
        return self.user_override if self.user_override is not None else self.s_final

    @classmethod
    def combine(
        cls,
        s_sem: int,
        s_stat: int,
        rationale: str,
        omega: float = 0.6,
        user_override: Optional[int] = None,
    ) -> "InterestingnessScore":
        return cls(
            s_sem=s_sem,
            s_stat=s_stat,
            s_final=final_score(s_sem, s_stat, omega),
            rationale=rationale,
            weight_omega=omega,
            user_override=user_override,
        )


@dataclass(frozen=True)
class AnalyticalAction:
    kind: str
    detail: str


@dataclass(frozen=True)
class DataContext:
    attributes: frozenset[str] = frozenset()
    actions: tuple[AnalyticalAction, ...] = ()

    def sorted_attributes(self) -> tuple[str, ...]:
        return tuple(sorted(self.attributes))


@dataclass(frozen=True)
class Insight:
    insight_id: str
    summary: str
    source_turns: frozenset[int]
    evidence: tuple[EvidenceRef, ...]
    category: str
    score: InterestingnessScore
    data_context: DataContext
    created_seq: int
    topic_id: Optional[str] = None
    subtopic_id: Optional[str] = None
    data_related: tuple[str, ...] = ()
    semantic_related: tuple[tuple[str, float], ...] = ()
    transition: str = "initial"
    evidence_degraded: bool = False


@dataclass(frozen=True)
class Topic:
    topic_id: str
    title: str
    description: str
    embedding: tuple[float, ...]
    parent: Optional[str] = None
    insight_count: int = 0
    color_index: int = 0
    provenance: str = "generated"

    def is_main(self) -> bool:
        return self.parent is None


# ---------------------------------------------------------------------------
# Canonical JSON
# ---------------------------------------------------------------------------

FLOAT_DECIMALS = 6


def _canon_value(value: Any) -> Any:
    if isinstance(value, float):
        rounded = round(value, FLOAT_DECIMALS)
        return 0.0 if rounded == 0 else rounded
    if isinstance(value, Mapping):
        return {str(k): _canon_value(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_canon_value(v) for v in value]
    if isinstance(value, frozenset):
        return sorted(value)
    return value


def canonical_json(value: Any) -> str:
    """Serialize to the canonical wire form: sorted keys, compact separators,
    floats rounded to 6 decimal places."""
    return json.dumps(_canon_value(value), sort_keys=True, separators=(",", ":"), ensure_ascii=False)


# ---------------------------------------------------------------------------
# to_dict / from_dict converters
# ---------------------------------------------------------------------------


def attribute_to_dict(a: Attribute) -> dict:
    return {"name": a.name, "kind": a.kind, "null_count": a.null_count}


def attribute_from_dict(d: Mapping) -> Attribute:
    return Attribute(name=d["name"], kind=d["kind"], null_count=int(d.get("null_count", 0)))


def profile_to_dict(p: DatasetProfile) -> dict:
    return {
        "name": p.name,
        "attributes": [attribute_to_dict(a) for a in p.attributes],
        "row_count": p.row_count,
        "preview_rows": [list(r) for r in p.preview_rows],
        "nl_description": p.nl_description,
    }


def profile_from_dict(d: Mapping) -> DatasetProfile:
    return DatasetProfile(
        name=d["name"],
        attributes=tuple(attribute_from_dict(a) for a in d["attributes"]),
        row_count=int(d["row_count"]),
        preview_rows=tuple(tuple(str(c) for c in r) for r in d["preview_rows"]),
        nl_description=d["nl_description"],
    )


def block_to_dict(b: ResponseBlock) -> dict:
    return {"block_index": b.block_index, "kind": b.kind, "content": b.content}


def block_from_dict(d: Mapping) -> ResponseBlock:
    return ResponseBlock(block_index=int(d["block_index"]), kind=d["kind"], content=d["content"])


def turn_to_dict(t: ConversationTurn) -> dict:
    return {
        "turn_id": t.turn_id,
        "user_query": t.user_query,
        "blocks": [block_to_dict(b) for b in t.blocks],
        "created_at": t.created_at,
    }


def turn_from_dict(d: Mapping) -> ConversationTurn:
    return ConversationTurn(
        turn_id=int(d["turn_id"]),
        user_query=d["user_query"],
        blocks=tuple(block_from_dict(b) for b in d["blocks"]),
        created_at=d.get("created_at", ""),
    )


def evidence_ref_to_dict(r: EvidenceRef) -> dict:
    return {
        "turn_id": r.turn_id,
        "block_index": r.block_index,
        "evidence_kind": r.evidence_kind,
        "char_range": list(r.char_range) if r.char_range is not None else None,
    }


def evidence_ref_from_dict(d: Mapping) -> EvidenceRef:
    rng = d.get("char_range")
    return EvidenceRef(
        turn_id=int(d["turn_id"]),
        block_index=int(d["block_index"]),
        evidence_kind=d["evidence_kind"],
        char_range=(int(rng[0]), int(rng[1])) if rng is not None else None,
    )


def score_to_dict(s: InterestingnessScore) -> dict:
    return {
        "s_sem": s.s_sem,
        "s_stat": s.s_stat,
        "s_final": s.s_final,
        "weight_omega": s.weight_omega,
        "rationale": s.rationale,
        "user_override": s.user_override,
    }


def score_from_dict(d: Mapping) -> InterestingnessScore:
    return InterestingnessScore(
        s_sem=int(d["s_sem"]),
        s_stat=int(d["s_stat"]),
        s_final=int(d["s_final"]),
        rationale=d.get("rationale", ""),
        weight_omega=float(d.get("weight_omega", 0.6)),
        user_override=None if d.get("user_override") is None else int(d["user_override"]),
    )


def context_to_dict(c: DataContext) -> dict:
    return {
        "attributes": sorted(c.attributes),
        "actions": [{"kind": a.kind, "detail": a.detail} for a in c.actions],
    }


def context_from_dict(d: Mapping) -> DataContext:
    return DataContext(
        attributes=frozenset(d.get("attributes", ())),
        actions=tuple(AnalyticalAction(kind=a["kind"], detail=a["detail"]) for a in d.get("actions", ())),
    )


def insight_to_dict(i: Insight) -> dict:
    return {
        "insight_id": i.insight_id,
        "summary": i.summary,
        "source_turns": sorted(i.source_turns),
        "evidence": [evidence_ref_to_dict(r) for r in i.evidence],
        "category": i.category,
        "score": score_to_dict(i.score),
        "data_context": context_to_dict(i.data_context),
        "topic_id": i.topic_id,
        "subtopic_id": i.subtopic_id,
        "data_related": list(i.data_related),
        "semantic_related": [[iid, round(sim, FLOAT_DECIMALS)] for iid, sim in i.semantic_related],
        "transition": i.transition,
        "created_seq": i.created_seq,
        "evidence_degraded": i.evidence_degraded,
    }


def insight_from_dict(d: Mapping) -> Insight:
    return Insight(
        insight_id=d["insight_id"],
        summary=d["summary"],
        source_turns=frozenset(int(t) for t in d["source_turns"]),
        evidence=tuple(evidence_ref_from_dict(r) for r in d["evidence"]),
        category=d["category"],
        score=score_from_dict(d["score"]),
        data_context=context_from_dict(d["data_context"]),
        topic_id=d.get("topic_id"),
        subtopic_id=d.get("subtopic_id"),
        data_related=tuple(d.get("data_related", ())),
        semantic_related=tuple((p[0], float(p[1])) for p in d.get("semantic_related", ())),
        transition=d.get("transition", "initial"),
        created_seq=int(d["created_seq"]),
        evidence_degraded=bool(d.get("evidence_degraded", False)),
    )


def topic_to_dict(t: Topic) -> dict:
    return {
        "topic_id": t.topic_id,
        "title": t.title,
        "description": t.description,
        "parent": t.parent,
        "embedding": [round(v, FLOAT_DECIMALS) for v in t.embedding],
        "insight_count": t.insight_count,
        "color_index": t.color_index,
        "provenance": t.provenance,
    }


def topic_from_dict(d: Mapping) -> Topic:
    return Topic(
        topic_id=d["topic_id"],
        title=d["title"],
        description=d.get("description", ""),
        parent=d.get("parent"),
        embedding=tuple(float(v) for v in d.get("embedding", ())),
        insight_count=int(d.get("insight_count", 0)),
        color_index=int(d.get("color_index", 0)),
        provenance=d.get("provenance", "generated"),
    )


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    code: str
    message: str


class SessionView:
    """The minimal read surface validate_insight needs: turns, topics, profile.

    Implemented by the session store; tests may pass a lightweight stand-in.
    """

    def get_turn(self, turn_id: int) -> Optional[ConversationTurn]:
        raise NotImplementedError

    def get_topic(self, topic_id: str) -> Optional[Topic]:
        raise NotImplementedError

    @property
    def profile(self) -> Optional[DatasetProfile]:
        raise NotImplementedError


def resolve_evidence(ref: EvidenceRef, turn: Optional[ConversationTurn]) -> Optional[str]:
    """Return the referenced text if the ref resolves, else None.

    Resolution requires an existing block of the matching kind and, when a
    char_range is present, a non-empty half-open range inside the block. The
    returned text is by construction a verbatim substring of the block.
    """
    if turn is None:
        return None
    if not 0 <= ref.block_index < len(turn.blocks):
        return None
    block = turn.blocks[ref.block_index]
    if EVIDENCE_KIND_FOR_BLOCK.get(block.kind) != ref.evidence_kind:
        return None
    if ref.char_range is None:
        return block.content
    start, end = ref.char_range
    if not (0 <= start < end <= len(block.content)):
        return None
    return block.content[start:end]


def validate_insight(insight: Insight, session: SessionView) -> list[Violation]:
    """Check every insight invariant against session state.

    Violations are data, not failures: the return value is a (possibly
    empty) report and the function never raises for invalid insights.
    """
    out: list[Violation] = []

    if not insight.summary:
        out.append(Violation("empty_summary", "summary must be non-empty"))
    elif len(insight.summary) > SUMMARY_MAX_CHARS:
        out.append(
            Violation("summary_too_long", f"summary exceeds {SUMMARY_MAX_CHARS} characters")
        )

    if insight.category not in INSIGHT_CATEGORIES:
        out.append(Violation("unknown_category", f"unknown category {insight.category!r}"))
    if insight.transition not in TRANSITIONS:
        out.append(Violation("unknown_transition", f"unknown transition {insight.transition!r}"))

    s = insight.score
    for label, v in (("s_sem", s.s_sem), ("s_stat", s.s_stat), ("s_final", s.s_final)):
        if not 1 <= v <= 5:
            out.append(Violation("score_out_of_range", f"{label}={v} outside [1, 5]"))
    if not 0 <= s.weight_omega <= 1:
        out.append(Violation("omega_out_of_range", f"weight_omega={s.weight_omega}"))
    elif 1 <= s.s_sem <= 5 and 1 <= s.s_stat <= 5:
        expected = final_score(s.s_sem, s.s_stat, s.weight_omega)
        if s.s_final != expected:
            out.append(
                Violation(
                    "score_formula",
                    f"s_final={s.s_final} but combine({s.s_sem}, {s.s_stat}) = {expected}",
                )
            )
    if s.user_override is not None and not 1 <= s.user_override <= 5:
        out.append(Violation("override_out_of_range", f"user_override={s.user_override}"))

    profile = session.profile
    if profile is not None:
        schema = set(profile.attribute_names())
        for name in sorted(insight.data_context.attributes):
            if name not in schema:
                out.append(Violation("attribute_not_in_schema", f"attribute {name!r} not in schema"))
    for action in insight.data_context.actions:
        if action.kind not in ACTION_KINDS:
            out.append(Violation("unknown_action", f"unknown action kind {action.kind!r}"))
        if not action.detail:
            out.append(Violation("empty_action_detail", f"action {action.kind} has empty detail"))

    for turn_id in sorted(insight.source_turns):
        if session.get_turn(turn_id) is None:
            out.append(Violation("unknown_source_turn", f"turn {turn_id} not in session"))
    for ref in insight.evidence:
        if resolve_evidence(ref, session.get_turn(ref.turn_id)) is None:
            out.append(
                Violation(
                    "dangling_evidence_ref",
                    f"evidence ref turn {ref.turn_id} block {ref.block_index} does not resolve",
                )
            )

    if insight.topic_id is None or insight.subtopic_id is None:
        out.append(Violation("unorganized", "insight has no topic assignment"))
    else:
        topic = session.get_topic(insight.topic_id)
        sub = session.get_topic(insight.subtopic_id)
        if topic is None or not topic.is_main():
            out.append(Violation("bad_topic", f"topic {insight.topic_id!r} is not a main topic"))
        if sub is None or sub.parent != insight.topic_id:
            out.append(
                Violation(
                    "bad_subtopic",
                    f"subtopic {insight.subtopic_id!r} is not a child of {insight.topic_id!r}",
                )
            )

    if insight.insight_id in insight.data_related:
        out.append(Violation("self_reference", "insight lists itself as data-related"))
    if any(iid == insight.insight_id for iid, _ in insight.semantic_related):
        out.append(Violation("self_reference", "insight lists itself as semantic-related"))

    return out
