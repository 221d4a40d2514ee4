"""Insight organization agent: data context, topics, relations, transitions.

Data-context extraction is schema-restricted: attributes the LLM returns
that do not exist in the dataset are dropped and counted as fabrications.
Topic assignment keeps a two-level tree; when the agent generates a new
topic, the title must stay below a cosine-similarity ceiling against every
same-level sibling, enforced by a bounded regenerate loop.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

from . import prompts
from .gateway import ChatMessage, ChatRequest, EmbeddingVector, cosine_similarity
from .model import ACTION_KINDS, AnalyticalAction, DataContext, DatasetProfile, Topic

logger = logging.getLogger(__name__)

SIMILARITY_THRESHOLD = 0.55
GENERATE_ATTEMPTS = 3
SEMANTIC_TOP_K = 5

UNCLASSIFIED_TITLE = "Unclassified"


@dataclass(frozen=True)
class ContextResult:
    context: DataContext
    fabricated: tuple[str, ...]
    notes: tuple[str, ...]


@dataclass(frozen=True)
class GeneratedTopic:
    title: str
    description: str
    embedding: tuple[float, ...]
    max_sibling_similarity: float


@dataclass(frozen=True)
class Regeneration:
    title: str
    max_sibling_similarity: float


@dataclass(frozen=True)
class TopicDecision:
    selected: Optional[str] = None
    generated: Optional[GeneratedTopic] = None
    regenerations: tuple[Regeneration, ...] = ()
    notes: tuple[str, ...] = ()


def _parse_json_object(text: str) -> Optional[dict]:
    raw = text.strip()
    if raw.startswith("```"):
        lines = raw.splitlines()
        raw = "\n".join(line for line in lines if not line.startswith("```"))
    try:
        payload = json.loads(raw)
    except json.JSONDecodeError:
        return None
    return payload if isinstance(payload, dict) else None


def determine_data_context(
    provider,
    summary: str,
    evidence_texts: Sequence[str],
    profile: DatasetProfile,
) -> ContextResult:
    """Schema-restricted attribute and action selection for one insight."""
    prompt = prompts.render(
        "io_context",
        attributes="\n".join(
            f"- {a.name} ({a.kind})" for a in profile.attributes
        ),
        summary=summary,
        evidence="\n".join(f"> {t}" for t in evidence_texts) or "(none)",
    )
    response = provider.complete(
        ChatRequest(channel="io_agent", messages=(ChatMessage(role="user", content=prompt),))
    )
    payload = _parse_json_object(response.content)
    if payload is None:
        return ContextResult(
            context=DataContext(),
            fabricated=(),
            notes=("context reply unparseable; empty context",),
        )

    valid_names = {a.name for a in profile.attributes}
    kept: list[str] = []
    fabricated: list[str] = []
    for name in payload.get("attributes", []) or []:
        if not isinstance(name, str):
            continue
        if name in valid_names:
            if name not in kept:
                kept.append(name)
        else:
            fabricated.append(name)

    actions: list[AnalyticalAction] = []
    for item in payload.get("actions", []) or []:
        if not isinstance(item, dict):
            continue
        kind = item.get("kind")
        detail = item.get("detail")
        if kind in ACTION_KINDS and isinstance(detail, str) and detail.strip():
            actions.append(AnalyticalAction(kind=kind, detail=detail.strip()))

    notes = []
    if fabricated:
        notes.append("dropped fabricated attributes: " + ", ".join(fabricated))
    if not kept:
        notes.append("no valid attributes in context reply")
    return ContextResult(
        context=DataContext(attributes=frozenset(kept), actions=tuple(actions)),
        fabricated=tuple(fabricated),
        notes=tuple(notes),
    )


def _render_candidates(
    candidates: Sequence[Topic], similarities: Sequence[float]
) -> str:
    if not candidates:
        return "(no existing topics yet)"
    return "\n".join(
        f'- {t.topic_id} "{t.title}" (similarity {s:.3f}): {t.description}'
        for t, s in zip(candidates, similarities)
    )


def assign_topic(
    provider,
    embedder,
    insight_summary: str,
    insight_embedding: EmbeddingVector,
    level: str,
    candidates: Sequence[Topic],
    parent: Optional[Topic] = None,
    threshold: float = SIMILARITY_THRESHOLD,
) -> TopicDecision:
    """Select an existing topic or generate a distinct new one.

    Generated titles too similar to an existing sibling (> threshold) force
    regeneration; after GENERATE_ATTEMPTS failures the most similar
    existing candidate is selected instead, so assignment always ends.
    """
    if level not in ("main", "sub"):
        raise ValueError(f"bad topic level {level!r}")
    sims = [cosine_similarity(insight_embedding, EmbeddingVector(t.embedding, "")) for t in candidates]
    parent_note = (
        f'The main topic already chosen for this insight is "{parent.title}"; '
        "classify the insight into a subtopic inside it."
        if parent is not None
        else ""
    )
    base_prompt = prompts.render(
        "io_topic",
        level=level,
        summary=insight_summary,
        candidates=_render_candidates(candidates, sims),
        parent_note=parent_note,
    )

    by_id = {t.topic_id: t for t in candidates}
    messages = [ChatMessage(role="user", content=base_prompt)]
    regenerations: list[Regeneration] = []
    notes: list[str] = []

    for attempt in range(GENERATE_ATTEMPTS):
        response = provider.complete(
            ChatRequest(channel="io_agent", messages=tuple(messages))
        )
        payload = _parse_json_object(response.content)

        if payload and isinstance(payload.get("selected"), str):
            topic_id = payload["selected"]
            if topic_id in by_id:
                return TopicDecision(
                    selected=topic_id,
                    regenerations=tuple(regenerations),
                    notes=tuple(notes),
                )
            notes.append(f"selected unknown topic id {topic_id!r}")
        elif payload and isinstance(payload.get("generated"), dict):
            gen = payload["generated"]
            title = str(gen.get("title", "")).strip()
            description = str(gen.get("description", "")).strip()
            if title:
                embedding = embedder.embed([f"{title}: {description}"])[0]
                sibling_sims = [
                    cosine_similarity(embedding, EmbeddingVector(t.embedding, ""))
                    for t in candidates
                ]
                worst = max(sibling_sims, default=0.0)
                if worst <= threshold:
                    return TopicDecision(
                        generated=GeneratedTopic(
                            title=title,
                            description=description,
                            embedding=embedding.values,
                            max_sibling_similarity=worst,
                        ),
                        regenerations=tuple(regenerations),
                        notes=tuple(notes),
                    )
                regenerations.append(Regeneration(title=title, max_sibling_similarity=worst))
                messages.append(ChatMessage(role="assistant", content=response.content))
                messages.append(
                    ChatMessage(
                        role="user",
                        content=(
                            f'"{title}" is too similar to an existing {level} topic '
                            f"(similarity {worst:.3f} > {threshold}). Generate a "
                            "clearly different topic, or select an existing one."
                        ),
                    )
                )
                continue
            notes.append("generated topic had empty title")
        else:
            notes.append(f"topic reply attempt {attempt + 1} unparseable")

        # Malformed attempts also consume the loop budget; re-ask plainly.
        messages.append(ChatMessage(role="assistant", content=response.content))
        messages.append(
            ChatMessage(
                role="user",
                content=(
                    "Reply with a JSON object of the form "
                    '{"selected": "<topic id>"} or '
                    '{"generated": {"title": "...", "description": "..."}} only.'
                ),
            )
        )

    if candidates:
        best = max(range(len(candidates)), key=lambda i: sims[i])
        notes.append("generation attempts exhausted; selected most similar candidate")
        return TopicDecision(
            selected=candidates[best].topic_id,
            regenerations=tuple(regenerations),
            notes=tuple(notes),
        )
    notes.append("generation attempts exhausted with no candidates")
    return TopicDecision(regenerations=tuple(regenerations), notes=tuple(notes))


def related_insights(
    attrs: frozenset,
    embedding: EmbeddingVector,
    priors: Sequence[tuple[str, frozenset, EmbeddingVector, int]],
    top_k: int = SEMANTIC_TOP_K,
) -> tuple[tuple[str, ...], tuple[tuple[str, float], ...]]:
    """(data_related ids, semantic_related (id, similarity)) over priors.

    priors are (insight_id, context attrs, summary embedding, created_seq);
    self must not be included by the caller.
    """
    data_scored = [
        (len(attrs & p_attrs), seq, pid)
        for pid, p_attrs, _, seq in priors
        if attrs & p_attrs
    ]
    data_scored.sort(key=lambda t: (-t[0], -t[1]))
    data_related = tuple(pid for _, _, pid in data_scored)

    semantic_scored = [
        (cosine_similarity(embedding, p_emb), seq, pid)
        for pid, _, p_emb, seq in priors
    ]
    semantic_scored.sort(key=lambda t: (-t[0], -t[1]))
    semantic_related = tuple((pid, sim) for sim, _, pid in semantic_scored[:top_k])
    return data_related, semantic_related


def classify_transition(
    current: frozenset, prior_contexts: Sequence[frozenset]
) -> str:
    """Attribute-focus transition relative to the prior insight sequence."""
    if not prior_contexts:
        return "initial"
    if current & prior_contexts[-1]:
        return "continue"
    if any(current & earlier for earlier in prior_contexts[:-1]):
        return "retain"
    return "shift"
