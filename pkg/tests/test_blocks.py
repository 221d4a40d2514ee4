"""Fenced code block parsing, whole-text and streamed."""

from __future__ import annotations

import random

from hypothesis import given, settings
from hypothesis import strategies as st

from chatinsights.blocks import BlockStreamParser, ParsedBlock, parse_blocks


def stream_parse(text: str, chunks: list[str]) -> list[ParsedBlock]:
    assert "".join(chunks) == text
    parser = BlockStreamParser()
    events = []
    for chunk in chunks:
        events += parser.feed(chunk)
    events += parser.finish()
    return [e.block for e in events if e.action == "close"]


def random_chunks(rng: random.Random, text: str) -> list[str]:
    cuts = sorted(rng.sample(range(1, len(text)), rng.randint(0, min(12, len(text) - 1))))
    out, prev = [], 0
    for cut in cuts:
        out.append(text[prev:cut])
        prev = cut
    out.append(text[prev:])
    return out


class TestParseBlocks:
    def test_text_only(self):
        blocks = parse_blocks("just words\nover two lines")
        assert [b.kind for b in blocks] == ["text"]
        assert blocks[0].content == "just words\nover two lines"

    def test_single_fence_with_language(self):
        blocks = parse_blocks("intro\n```python\nx = 1\n```\noutro")
        assert [(b.kind, b.language) for b in blocks] == [
            ("text", ""),
            ("code", "python"),
            ("text", ""),
        ]
        assert blocks[1].content == "x = 1"

    def test_adjacent_fences(self):
        blocks = parse_blocks("```\na\n```\n```sql\nb\n```")
        assert [b.kind for b in blocks] == ["code", "code"]
        assert blocks[1].language == "sql"

    def test_unterminated_fence_flagged(self):
        blocks = parse_blocks("hello\n```python\nx = 1")
        assert blocks[-1].kind == "code"
        assert blocks[-1].unterminated is True
        assert blocks[-1].content == "x = 1"

    def test_empty_fenced_block_kept(self):
        blocks = parse_blocks("```python\n```")
        assert [(b.kind, b.content) for b in blocks] == [("code", "")]

    def test_blank_text_between_fences_dropped(self):
        blocks = parse_blocks("```\na\n```\n\n\n```\nb\n```")
        assert [b.kind for b in blocks] == ["code", "code"]

    def test_empty_input(self):
        assert parse_blocks("") == []

    def test_fence_marker_must_start_line(self):
        blocks = parse_blocks("inline ``` is not a fence")
        assert [b.kind for b in blocks] == ["text"]

    def test_crlf_input(self):
        blocks = parse_blocks("hi\r\n```python\r\nx = 1\r\n```\r\n")
        assert [b.kind for b in blocks] == ["text", "code"]
        assert blocks[1].content == "x = 1"


class TestStreaming:
    CASES = [
        "plain text only",
        "a\n```python\nx = 1\ny = 2\n```\ntail",
        "```\nonly code\n```",
        "start\n```sql\nselect 1\n```\n```python\nz\n```",
        "dangling\n```python\nnever closed",
        "```python\n```",
    ]

    def test_char_at_a_time_matches_whole_parse(self):
        for text in self.CASES:
            assert stream_parse(text, list(text)) == parse_blocks(text)

    def test_seeded_random_chunkings(self):
        rng = random.Random(20240101)
        for text in self.CASES:
            for _ in range(40):
                chunks = random_chunks(rng, text)
                assert stream_parse(text, chunks) == parse_blocks(text)

    def test_open_delta_close_discipline(self):
        parser = BlockStreamParser()
        events = parser.feed("hi\n```python\nx = 1\n```\n")
        events += parser.finish()
        opens = [e for e in events if e.action == "open"]
        closes = [e for e in events if e.action == "close"]
        assert len(opens) == len(closes) == 2
        # deltas for a block arrive between its open and its close
        actions = [e.action for e in events]
        assert actions.index("open") < actions.index("close")

    def test_feed_after_finish_rejected(self):
        parser = BlockStreamParser()
        parser.finish()
        try:
            parser.feed("more")
        except RuntimeError:
            pass
        else:
            raise AssertionError("expected RuntimeError after finish()")

    @settings(max_examples=60)
    @given(st.text(alphabet="a`\npx= 1", max_size=60), st.integers(1, 7))
    def test_fixed_size_chunking_equivalence(self, text, size):
        chunks = [text[i : i + size] for i in range(0, len(text), size)] or [""]
        assert stream_parse(text, chunks) == parse_blocks(text)
