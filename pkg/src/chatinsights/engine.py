"""Session engine: the chat loop plus the IE/IO pipeline, event-sourced.

The engine owns no state of its own beyond transient plumbing (chat
history, the raw table, an embedding cache): every durable change is
expressed as a SessionEvent and applied through the store, so the event
log is the single source of truth and replaying it reproduces the
snapshot exactly.

Per accepted insight the pipeline runs: bind evidence, determine data
context (schema-restricted), statistical and semantic scoring, main and
subtopic assignment with the similarity-ceiling regenerate loop, related
insight ranking, and context-transition classification.
"""

from __future__ import annotations

import dataclasses
import logging
import tempfile
from fractions import Fraction
from pathlib import Path
from typing import Callable, Optional

from . import prompts
from .chat import TurnBlock, run_turn
from .config import AppConfig
from .dataset import DataTable, ingest_csv
from .extraction import (
    AgentMemory,
    InsightDelta,
    bind_evidence,
    extract_deltas,
    majority_vote,
    merge_evidence,
)
from .gateway import ChatMessage, EmbeddingVector, GatewayError
from .model import (
    ConversationTurn,
    DataContext,
    Insight,
    InterestingnessScore,
    Topic,
    final_score,
    insight_to_dict,
    profile_to_dict,
    resolve_evidence,
    topic_to_dict,
)
from .organization import (
    UNCLASSIFIED_TITLE,
    assign_topic,
    classify_transition,
    determine_data_context,
    related_insights,
)
from .scoring import semantic_score, statistical_metric, statistical_score
from .store import LogicalClock, SessionEvent, SessionState, apply_event

logger = logging.getLogger(__name__)


class BusyError(RuntimeError):
    """A turn is already in flight for this session."""


class NoDatasetError(RuntimeError):
    """The session has no ingested dataset yet."""


class SessionEngine:
    def __init__(
        self,
        session_id: str,
        provider,
        executor,
        config: Optional[AppConfig] = None,
        clock: Optional[LogicalClock] = None,
    ):
        self.provider = provider
        self.executor = executor
        self.config = config or AppConfig()
        self.clock = clock or LogicalClock()
        self.state = SessionState()
        self.memory = AgentMemory(budget=self.config.memory_budget)
        self.busy = False
        self._sinks: list[Callable[[SessionEvent], None]] = []
        self._messages: list[ChatMessage] = []
        self._table: Optional[DataTable] = None
        self._dataset_file: Optional[Path] = None
        self._embeddings: dict[str, EmbeddingVector] = {}
        self._next_turn = 1
        self._next_insight = 1
        self._next_topic = 1
        self.emit(
            "session_created",
            {
                "session_id": session_id,
                "config": {**self.config.echo(), "prompt_hashes": prompts.all_hashes()},
            },
        )

    # -- plumbing ----------------------------------------------------------

    @property
    def next_turn_id(self) -> int:
        return self._next_turn

    def add_sink(self, sink: Callable[[SessionEvent], None]) -> None:
        self._sinks.append(sink)

    def remove_sink(self, sink: Callable[[SessionEvent], None]) -> None:
        if sink in self._sinks:
            self._sinks.remove(sink)

    def emit(self, kind: str, payload: dict) -> SessionEvent:
        event = SessionEvent(
            seq=self.state.next_seq(), kind=kind, payload=payload, at=self.clock.tick()
        )
        apply_event(self.state, event)
        for sink in list(self._sinks):
            sink(event)
        return event

    def _diagnostic(self, source: str, message: str) -> None:
        self.emit("diagnostic", {"source": source, "message": message})

    def close(self) -> None:
        if self._dataset_file is not None:
            self._dataset_file.unlink(missing_ok=True)
            self._dataset_file = None

    # -- commands ----------------------------------------------------------

    def ingest_dataset(self, data: bytes, name: str):
        profile, table = ingest_csv(data, name)
        self._table = table
        tmp = tempfile.NamedTemporaryFile(
            prefix="chatinsights-data-", suffix=".csv", delete=False
        )
        tmp.write(data)
        tmp.close()
        self._dataset_file = Path(tmp.name)
        self.emit(
            "dataset_ingested",
            {
                "profile": profile_to_dict(profile),
                "attribute_order": [a.name for a in profile.attributes],
            },
        )
        self._messages = [
            ChatMessage(
                role="system",
                content=prompts.render(
                    "analysis_system", dataset_description=profile.nl_description
                ),
            )
        ]
        return profile

    def post_message(self, text: str) -> ConversationTurn:
        if self.busy:
            raise BusyError("a turn is already in flight")
        if self.state.profile is None:
            raise NoDatasetError("ingest a dataset before chatting")
        self.busy = True
        try:
            turn_id = self._next_turn
            self._next_turn += 1
            self.emit("turn_started", {"turn_id": turn_id, "user_query": text})

            next_index = 0

            def on_block(block: TurnBlock) -> None:
                nonlocal next_index
                self.emit(
                    "block_complete",
                    {
                        "turn_id": turn_id,
                        "block": {
                            "block_index": next_index,
                            "kind": block.kind,
                            "content": block.content,
                        },
                    },
                )
                next_index += 1

            def on_delta(delta: str) -> None:
                self.emit("block_delta", {"turn_id": turn_id, "text": delta})

            try:
                run_turn(
                    self.provider,
                    self.executor,
                    self._messages,
                    text,
                    self._dataset_file,
                    on_block,
                    on_delta,
                    interpret_cap=self.config.interpret_cap,
                    executor_timeout_s=self.config.executor_timeout_s,
                )
            except Exception as exc:
                self.emit("turn_error", {"turn_id": turn_id, "message": str(exc)})
                raise
            self.emit("turn_complete", {"turn_id": turn_id})
            turn = self.state.turns[turn_id]
            self._process_turn(turn)
            return turn
        finally:
            self.busy = False

    def ingest_turn(self, turn: ConversationTurn) -> None:
        """Feed a pre-recorded turn straight into the IE/IO pipeline.

        Batch mode for transcripts: the analysis chat is skipped, but the
        turn still enters state through the normal event kinds.
        """
        if self.state.profile is None:
            raise NoDatasetError("ingest a dataset before feeding turns")
        if turn.turn_id in self.state.turns:
            raise ValueError(f"duplicate turn id {turn.turn_id}")
        self.emit("turn_started", {"turn_id": turn.turn_id, "user_query": turn.user_query})
        for block in turn.blocks:
            self.emit(
                "block_complete",
                {
                    "turn_id": turn.turn_id,
                    "block": {
                        "block_index": block.block_index,
                        "kind": block.kind,
                        "content": block.content,
                    },
                },
            )
        self.emit("turn_complete", {"turn_id": turn.turn_id})
        self._next_turn = max(self._next_turn, turn.turn_id + 1)
        self._process_turn(self.state.turns[turn.turn_id])

    def adjust_score(self, insight_id: str, value) -> Insight:
        if insight_id not in self.state.insights:
            raise KeyError(f"unknown insight {insight_id}")
        if not isinstance(value, int) or isinstance(value, bool) or not 1 <= value <= 5:
            raise ValueError(f"score override must be an integer in [1,5], got {value!r}")
        self.emit("score_adjusted", {"insight_id": insight_id, "value": value})
        return self.state.insights[insight_id]

    def set_attribute_order(self, order: list[str]) -> list[str]:
        if sorted(order) != sorted(self.state.attribute_order):
            raise ValueError("order must be a permutation of the dataset attributes")
        self.emit("attribute_order_changed", {"order": list(order)})
        return self.state.attribute_order

    # -- IE/IO pipeline ------------------------------------------------------

    def _process_turn(self, turn: ConversationTurn) -> None:
        deltas, notes = extract_deltas(self.provider, turn, self.memory, self.state.profile)
        for note in notes:
            self._diagnostic("ie_agent", note)
        for delta in deltas:
            if delta.action == "refine_existing":
                if delta.target in self.state.insights:
                    self._refine_insight(delta, turn)
                    continue
                self._diagnostic(
                    "ie_agent",
                    f"refine target {delta.target} not found; treating delta as new insight",
                )
            self._add_insight(delta, turn)

    def _refine_insight(self, delta: InsightDelta, turn: ConversationTurn) -> None:
        bound = bind_evidence(delta, self.state.get_turn)
        if bound.dropped:
            self.emit("evidence_dropped", {"turn_id": turn.turn_id, "count": bound.dropped})
        old = self.state.insights[delta.target]
        merged = merge_evidence(old.evidence, bound.accepted)
        sources = frozenset(
            old.source_turns | {turn.turn_id} | {r.turn_id for r in bound.accepted}
        )
        updated = dataclasses.replace(
            old,
            summary=delta.summary,
            evidence=merged,
            source_turns=sources,
            evidence_degraded=len(merged) == 0,
        )
        self.emit("insight_refined", {"insight": insight_to_dict(updated)})
        if updated.evidence_degraded:
            self.emit("insight_evidence_degraded", {"insight_id": updated.insight_id})
        self.memory.remember(updated.insight_id, updated.summary, updated.score.s_sem)

    def _add_insight(self, delta: InsightDelta, turn: ConversationTurn) -> None:
        insight_id = f"i{self._next_insight}"
        self._next_insight += 1

        bound = bind_evidence(delta, self.state.get_turn)
        if bound.dropped:
            self.emit("evidence_dropped", {"turn_id": turn.turn_id, "count": bound.dropped})

        category = majority_vote(list(delta.category_votes))
        evidence_texts = [
            text
            for ref in bound.accepted
            if (text := resolve_evidence(ref, self.state.get_turn(ref.turn_id))) is not None
        ]
        ctx = determine_data_context(self.provider, delta.summary, evidence_texts, self.state.profile)

        reading, metric_note = statistical_metric(
            category, ctx.context, self._table, self.state.profile
        )
        s_stat = statistical_score(reading, self.config.ladder_tables())

        judgment = semantic_score(self.provider, self._semantic_prompt(delta.summary, turn, category, ctx.context))
        s_final = final_score(judgment.value, s_stat, Fraction(str(self.config.omega)))
        score = InterestingnessScore(
            s_sem=judgment.value,
            s_stat=s_stat,
            s_final=s_final,
            rationale=judgment.rationale or ("defaulted" if judgment.defaulted else ""),
            weight_omega=self.config.omega,
        )

        sources = frozenset({turn.turn_id} | {r.turn_id for r in bound.accepted})
        insight = Insight(
            insight_id=insight_id,
            summary=delta.summary,
            source_turns=sources,
            evidence=bound.accepted,
            category=category,
            score=score,
            data_context=ctx.context,
            created_seq=self.state.next_seq(),
            evidence_degraded=bound.degraded,
        )
        self.emit("insight_added", {"insight": insight_to_dict(insight)})
        if ctx.fabricated:
            self.emit(
                "context_fabrication",
                {"insight_id": insight_id, "attributes": list(ctx.fabricated)},
            )
        for note in ctx.notes:
            if not note.startswith("dropped fabricated"):
                self._diagnostic("io_agent", note)
        if reading is None:
            self._diagnostic("interestingness", f"{insight_id}: {metric_note}; s_stat defaulted")
        if judgment.defaulted:
            self._diagnostic("semantic_score", f"{insight_id}: semantic score defaulted to 3")
        elif judgment.clamped:
            self._diagnostic("semantic_score", f"{insight_id}: semantic score clamped into [1,5]")
        if bound.degraded:
            self.emit("insight_evidence_degraded", {"insight_id": insight_id})

        self._organize_insight(insight)
        final = self.state.insights[insight_id]
        self.memory.remember(insight_id, final.summary, final.score.s_sem)

    # -- organization ------------------------------------------------------

    def _semantic_prompt(self, summary: str, turn: ConversationTurn, category: str, context: DataContext) -> str:
        analytic_context = (
            f"User query: {turn.user_query}\n"
            f"Category: {category}\n"
            f"Attributes: {', '.join(sorted(context.attributes)) or '(none)'}"
        )
        return prompts.render(
            "semantic_score",
            few_shots=prompts.load("score_few_shots"),
            prior_scores=self.memory.prior_scores(),
            context=analytic_context,
            summary=summary,
        )

    def _allocate_topic_id(self) -> str:
        topic_id = f"t{self._next_topic}"
        self._next_topic += 1
        return topic_id

    def _mains(self) -> list[Topic]:
        return [
            t
            for t in self.state.topics.values()
            if t.parent is None and t.title != UNCLASSIFIED_TITLE
        ]

    def _subs(self, parent_id: str) -> list[Topic]:
        return [t for t in self.state.topics.values() if t.parent == parent_id]

    def _ensure_unclassified(self) -> tuple[str, str]:
        """Reserved parking pair (main id, sub id) for failed assignments."""
        main = next(
            (t for t in self.state.topics.values() if t.parent is None and t.title == UNCLASSIFIED_TITLE),
            None,
        )
        if main is None:
            main_id = self._allocate_topic_id()
            main = Topic(
                topic_id=main_id,
                title=UNCLASSIFIED_TITLE,
                description="Insights whose topic assignment failed; retriable.",
                embedding=(),
                parent=None,
                insight_count=0,
                color_index=len(self._mains()),
                provenance="selected_only",
            )
            self.emit("topic_added", {"topic": topic_to_dict(main), "max_sibling_similarity": 0.0})
        sub = next((t for t in self.state.topics.values() if t.parent == main.topic_id), None)
        if sub is None:
            sub_id = self._allocate_topic_id()
            sub = Topic(
                topic_id=sub_id,
                title="General",
                description="Unclassified insights.",
                embedding=(),
                parent=main.topic_id,
                insight_count=0,
                color_index=main.color_index,
                provenance="selected_only",
            )
            self.emit("topic_added", {"topic": topic_to_dict(sub), "max_sibling_similarity": 0.0})
        return main.topic_id, sub.topic_id

    def _decide_topic(
        self,
        insight: Insight,
        embedding: EmbeddingVector,
        level: str,
        candidates: list[Topic],
        parent: Optional[Topic],
    ) -> Optional[str]:
        """Run one assignment level; returns the topic id, None on failure."""
        decision = assign_topic(
            self.provider,
            self.provider,
            insight.summary,
            embedding,
            level,
            candidates,
            parent,
            threshold=self.config.similarity_threshold,
        )
        for regen in decision.regenerations:
            self.emit(
                "topic_regenerated",
                {
                    "level": level,
                    "title": regen.title,
                    "max_sibling_similarity": round(regen.max_sibling_similarity, 6),
                    "threshold": self.config.similarity_threshold,
                },
            )
        for note in decision.notes:
            self._diagnostic("io_agent", f"{insight.insight_id} ({level} topic): {note}")
        if decision.generated is not None:
            gen = decision.generated
            topic_id = self._allocate_topic_id()
            color = parent.color_index if parent is not None else len(self._mains())
            topic = Topic(
                topic_id=topic_id,
                title=gen.title,
                description=gen.description,
                embedding=gen.embedding,
                parent=parent.topic_id if parent is not None else None,
                insight_count=0,
                color_index=color,
                provenance="generated",
            )
            self.emit(
                "topic_added",
                {
                    "topic": topic_to_dict(topic),
                    "max_sibling_similarity": round(gen.max_sibling_similarity, 6),
                },
            )
            return topic_id
        return decision.selected

    def _organize_insight(self, insight: Insight) -> None:
        try:
            embedding = self.provider.embed([insight.summary])[0]
            self._embeddings[insight.insight_id] = embedding

            main_id = self._decide_topic(insight, embedding, "main", self._mains(), None)
            if main_id is None:
                main_id, sub_id = self._ensure_unclassified()
            else:
                parent = self.state.topics[main_id]
                sub_id = self._decide_topic(
                    insight, embedding, "sub", self._subs(main_id), parent
                )
                if sub_id is None:
                    main_id, sub_id = self._ensure_unclassified()
        except GatewayError as exc:
            self._diagnostic(
                "io_agent", f"{insight.insight_id}: organization failed ({exc}); parked"
            )
            self._embeddings.setdefault(
                insight.insight_id, EmbeddingVector(values=(), source_text=insight.summary)
            )
            main_id, sub_id = self._ensure_unclassified()
            embedding = self._embeddings[insight.insight_id]

        priors = [
            (
                prior.insight_id,
                prior.data_context.attributes,
                self._embeddings[prior.insight_id],
                prior.created_seq,
            )
            for prior in self.state.insights.values()
            if prior.insight_id != insight.insight_id
            and prior.insight_id in self._embeddings
            and len(self._embeddings[prior.insight_id].values) > 0
        ]
        if embedding.values:
            data_related, semantic_related = related_insights(
                insight.data_context.attributes,
                embedding,
                priors,
                top_k=self.config.semantic_top_k,
            )
        else:
            data_scored = sorted(
                (
                    (len(insight.data_context.attributes & attrs), seq, pid)
                    for pid, attrs, _, seq in priors
                    if insight.data_context.attributes & attrs
                ),
                key=lambda t: (-t[0], -t[1]),
            )
            data_related = tuple(pid for _, _, pid in data_scored)
            semantic_related = ()

        prior_contexts = [
            prior.data_context.attributes
            for prior in sorted(self.state.insights.values(), key=lambda i: i.created_seq)
            if prior.insight_id != insight.insight_id
        ]
        transition = classify_transition(insight.data_context.attributes, prior_contexts)

        organized = dataclasses.replace(
            self.state.insights[insight.insight_id],
            topic_id=main_id,
            subtopic_id=sub_id,
            data_related=data_related,
            semantic_related=semantic_related,
            transition=transition,
        )
        self.emit("insight_organized", {"insight": insight_to_dict(organized)})

        main = self.state.topics[main_id]
        self.emit(
            "topic_updated",
            {"topic": topic_to_dict(dataclasses.replace(main, insight_count=main.insight_count + 1))},
        )
        sub = self.state.topics[sub_id]
        self.emit(
            "topic_updated",
            {"topic": topic_to_dict(dataclasses.replace(sub, insight_count=sub.insight_count + 1))},
        )
        self.emit(
            "transition_classified",
            {"insight_id": insight.insight_id, "transition": transition},
        )
