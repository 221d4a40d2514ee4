"""Prompt templates: loading, slot filling, provenance hashes."""

from __future__ import annotations

import hashlib

import pytest

from chatinsights import prompts

SLOTS = {
    "analysis_system": {"dataset_description"},
    "ie_agent": {"dataset", "few_shots", "memory", "turn", "turn_id"},
    "ie_few_shots": set(),
    "semantic_score": {"context", "few_shots", "prior_scores", "summary"},
    "score_few_shots": set(),
    "io_context": {"attributes", "evidence", "summary"},
    "io_topic": {"candidates", "level", "parent_note", "summary"},
}


class TestCatalog:
    def test_catalog_matches_expected_templates(self):
        assert set(prompts.TEMPLATE_NAMES) == set(SLOTS)

    def test_unknown_name_rejected(self):
        with pytest.raises(KeyError, match="unknown prompt template"):
            prompts.load("villain_monologue")

    @pytest.mark.parametrize("name", sorted(SLOTS))
    def test_loads_non_empty(self, name):
        assert prompts.load(name).strip()


class TestRender:
    @pytest.mark.parametrize("name", sorted(SLOTS))
    def test_every_slot_is_filled(self, name):
        values = {slot: f"<{slot}>" for slot in SLOTS[name]}
        rendered = prompts.render(name, **values)
        for slot, value in values.items():
            assert value in rendered, slot
        assert "$" not in rendered.replace("$$", "")

    def test_missing_slot_raises(self):
        with pytest.raises(KeyError):
            prompts.render("ie_agent", dataset="d")

    def test_json_braces_survive(self):
        # the extractor template shows the delta record shape literally
        rendered = prompts.render(
            "ie_agent", dataset="d", few_shots="f", memory="m", turn="t", turn_id="1")
        assert "{" in rendered and "}" in rendered


class TestHashes:
    def test_hash_is_sha256_of_contents(self):
        body = prompts.load("analysis_system").encode("utf-8")
        assert prompts.template_hash("analysis_system") == hashlib.sha256(body).hexdigest()

    def test_all_hashes_cover_catalog_and_are_stable(self):
        first = prompts.all_hashes()
        assert set(first) == set(prompts.TEMPLATE_NAMES)
        assert prompts.all_hashes() == first
        assert len(set(first.values())) == len(first), "templates must differ"
