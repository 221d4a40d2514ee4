"""Data context, topic assignment, related insights, transitions."""

from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chatinsights.dataset import ingest_csv
from chatinsights.gateway import EmbeddingVector, ScriptedProvider
from chatinsights.model import Topic
from chatinsights.organization import (
    GENERATE_ATTEMPTS,
    SIMILARITY_THRESHOLD,
    assign_topic,
    classify_transition,
    determine_data_context,
    related_insights,
)

from oracles import oracle_transitions


@pytest.fixture(scope="module")
def profile():
    profile, _ = ingest_csv(b"MPG,Origin,Weight\n18,USA,3400\n24,Japan,2100\n", "cars")
    return profile


def io_provider(*replies: dict | str, embeddings: dict | None = None) -> ScriptedProvider:
    entries = [r if isinstance(r, str) else json.dumps(r) for r in replies]
    return ScriptedProvider({"chat": {"io_agent": entries}, "embeddings": embeddings or {}})


def topic(topic_id: str, title: str, embedding, parent=None) -> Topic:
    return Topic(topic_id, title, "d", tuple(embedding), parent, 1, 0, "generated")


class TestDataContext:
    def test_keeps_valid_attributes_and_actions(self, profile):
        provider = io_provider(
            {"attributes": ["MPG", "Origin"],
             "actions": [{"kind": "aggregation", "detail": "mean MPG by Origin"}]}
        )
        result = determine_data_context(provider, "s", ["evidence"], profile)
        assert result.context.attributes == frozenset({"MPG", "Origin"})
        assert result.fabricated == ()
        assert result.notes == ()

    def test_fabricated_attributes_dropped_and_noted(self, profile):
        provider = io_provider({"attributes": ["MPG", "Decade"], "actions": []})
        result = determine_data_context(provider, "s", [], profile)
        assert result.context.attributes == frozenset({"MPG"})
        assert result.fabricated == ("Decade",)
        assert any("fabricated" in n for n in result.notes)

    def test_invalid_action_kinds_filtered(self, profile):
        provider = io_provider(
            {"attributes": ["MPG"],
             "actions": [{"kind": "hallucinate", "detail": "x"},
                         {"kind": "filter", "detail": "USA rows only"},
                         {"kind": "sort", "detail": "  "}]}
        )
        result = determine_data_context(provider, "s", [], profile)
        assert [a.kind for a in result.context.actions] == ["filter"]

    def test_unparseable_reply_yields_empty_context(self, profile):
        result = determine_data_context(io_provider("not json"), "s", [], profile)
        assert result.context.attributes == frozenset()
        assert any("unparseable" in n for n in result.notes)


class TestAssignTopic:
    insight_vec = EmbeddingVector((1.0, 0.0, 0.0), "insight")

    def test_select_existing(self):
        candidates = [topic("t1", "Fuel", (1.0, 0.0, 0.0)), topic("t4", "Power", (0.0, 1.0, 0.0))]
        decision = assign_topic(
            io_provider({"selected": "t4"}), None, "s", self.insight_vec, "main", candidates
        )
        assert decision.selected == "t4"
        assert decision.generated is None

    def test_generate_under_threshold(self):
        embeddings = {"Fresh Angle: new ground.": [0.0, 0.0, 1.0]}
        provider = io_provider(
            {"generated": {"title": "Fresh Angle", "description": "new ground."}},
            embeddings=embeddings,
        )
        candidates = [topic("t1", "Fuel", (1.0, 0.0, 0.0))]
        decision = assign_topic(provider, provider, "s", self.insight_vec, "main", candidates)
        assert decision.generated.title == "Fresh Angle"
        assert decision.generated.max_sibling_similarity <= SIMILARITY_THRESHOLD

    def test_similar_title_regenerated(self):
        embeddings = {
            "Gas Mileage: fuel use.": [0.8, 0.6, 0.0],      # sim 0.8 to Fuel: rejected
            "Road Noise: cabin sound.": [0.0, 0.0, 1.0],    # sim 0.0: accepted
        }
        provider = io_provider(
            {"generated": {"title": "Gas Mileage", "description": "fuel use."}},
            {"generated": {"title": "Road Noise", "description": "cabin sound."}},
            embeddings=embeddings,
        )
        candidates = [topic("t1", "Fuel", (1.0, 0.0, 0.0))]
        decision = assign_topic(provider, provider, "s", self.insight_vec, "main", candidates)
        assert decision.generated.title == "Road Noise"
        [regen] = decision.regenerations
        assert regen.title == "Gas Mileage"
        assert regen.max_sibling_similarity == pytest.approx(0.8)

    def test_exhausted_attempts_fall_back_to_most_similar(self):
        embeddings = {f"Same {i}: close.": [0.9, 0.435889894354, 0.0] for i in range(GENERATE_ATTEMPTS)}
        replies = [
            {"generated": {"title": f"Same {i}", "description": "close."}}
            for i in range(GENERATE_ATTEMPTS)
        ]
        provider = io_provider(*replies, embeddings=embeddings)
        candidates = [
            topic("t1", "Fuel", (1.0, 0.0, 0.0)),
            topic("t2", "Power", (0.0, 1.0, 0.0)),
        ]
        decision = assign_topic(provider, provider, "s", self.insight_vec, "main", candidates)
        assert decision.selected == "t1"  # most similar to the insight embedding
        assert len(decision.regenerations) == GENERATE_ATTEMPTS
        assert any("exhausted" in n for n in decision.notes)

    def test_unknown_selected_id_consumes_attempt_then_recovers(self):
        provider = io_provider({"selected": "t9"}, {"selected": "t1"})
        candidates = [topic("t1", "Fuel", (1.0, 0.0, 0.0))]
        decision = assign_topic(provider, provider, "s", self.insight_vec, "main", candidates)
        assert decision.selected == "t1"
        assert any("unknown topic id" in n for n in decision.notes)

    def test_no_candidates_generation_always_accepted(self):
        embeddings = {"Anything: x.": [0.5, 0.5, 0.0]}
        provider = io_provider(
            {"generated": {"title": "Anything", "description": "x."}}, embeddings=embeddings
        )
        decision = assign_topic(provider, provider, "s", self.insight_vec, "main", [])
        assert decision.generated.max_sibling_similarity == 0.0

    def test_bad_level_rejected(self):
        with pytest.raises(ValueError):
            assign_topic(io_provider(), None, "s", self.insight_vec, "tier", [])


class TestRelatedInsights:
    def priors(self):
        e = lambda *v: EmbeddingVector(tuple(v), "")
        return [
            ("i1", frozenset({"MPG", "Origin"}), e(1.0, 0.0), 10),
            ("i2", frozenset({"Weight"}), e(0.6, 0.8), 20),
            ("i3", frozenset({"MPG"}), e(0.0, 1.0), 30),
        ]

    def test_data_related_by_overlap_then_recency(self):
        data, _ = related_insights(
            frozenset({"MPG", "Origin"}), EmbeddingVector((1.0, 0.0), ""), self.priors()
        )
        # i1 shares two attrs; i3 shares one; i2 shares none
        assert data == ("i1", "i3")

    def test_recency_breaks_overlap_ties(self):
        data, _ = related_insights(
            frozenset({"MPG"}), EmbeddingVector((1.0, 0.0), ""), self.priors()
        )
        assert data == ("i3", "i1")

    def test_semantic_top_k_by_similarity(self):
        _, semantic = related_insights(
            frozenset(), EmbeddingVector((1.0, 0.0), ""), self.priors(), top_k=2
        )
        assert [pid for pid, _ in semantic] == ["i1", "i2"]
        assert semantic[0][1] == pytest.approx(1.0)
        assert semantic[1][1] == pytest.approx(0.6)

    def test_no_priors(self):
        data, semantic = related_insights(
            frozenset({"MPG"}), EmbeddingVector((1.0,), ""), []
        )
        assert data == () and semantic == ()


class TestTransitions:
    def test_named_cases(self):
        assert classify_transition(frozenset({"a"}), []) == "initial"
        assert classify_transition(frozenset({"a"}), [frozenset({"a", "b"})]) == "continue"
        assert (
            classify_transition(frozenset({"a"}), [frozenset({"a"}), frozenset({"c"})])
            == "retain"
        )
        assert (
            classify_transition(frozenset({"z"}), [frozenset({"a"}), frozenset({"c"})])
            == "shift"
        )

    @settings(max_examples=120)
    @given(
        st.lists(
            st.frozensets(st.sampled_from(["a", "b", "c"]), min_size=1, max_size=3),
            min_size=1,
            max_size=5,
        )
    )
    def test_matches_oracle_on_random_sequences(self, contexts):
        expected = oracle_transitions(contexts)
        got = [
            classify_transition(ctx, contexts[:i]) for i, ctx in enumerate(contexts)
        ]
        assert got == expected
