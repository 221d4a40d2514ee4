"""Streaming parser for fenced code blocks in assistant responses.

The parser is line-driven: chunks accumulate in a line buffer and only
complete lines advance the state machine, so the final block list is
independent of how the stream was chunked. ``parse_blocks`` on the whole
text and a ``BlockStreamParser`` fed arbitrary slices of the same text
yield identical lists.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Optional

_FENCE_OPEN = re.compile(r"^ {0,3}```([^`\n]*)$")
_FENCE_CLOSE = re.compile(r"^ {0,3}```\s*$")


@dataclass(frozen=True)
class ParsedBlock:
    kind: str  # "text" | "code"
    content: str
    language: str = ""
    unterminated: bool = False


@dataclass(frozen=True)
class BlockEvent:
    """Incremental parse event: "open", "delta" (one line), or "close"."""

    action: str
    kind: str
    line: str = ""
    block: Optional[ParsedBlock] = None


class BlockStreamParser:
    def __init__(self) -> None:
        self._buf = ""
        self._mode = "text"
        self._lines: list[str] = []
        self._language = ""
        self._open_emitted = False
        self._finished = False

    def feed(self, chunk: str) -> list[BlockEvent]:
        if self._finished:
            raise RuntimeError("parser already finished")
        events: list[BlockEvent] = []
        self._buf += chunk
        while True:
            nl = self._buf.find("\n")
            if nl < 0:
                break
            line, self._buf = self._buf[:nl], self._buf[nl + 1 :]
            events.extend(self._handle_line(line))
        return events

    def finish(self) -> list[BlockEvent]:
        if self._finished:
            raise RuntimeError("parser already finished")
        self._finished = True
        events: list[BlockEvent] = []
        if self._buf:
            events.extend(self._handle_line(self._buf))
            self._buf = ""
        if self._mode == "code":
            events.extend(self._close_block(unterminated=True))
        else:
            events.extend(self._close_block())
        return events

    def _handle_line(self, line: str) -> Iterator[BlockEvent]:
        if line.endswith("\r"):  # CRLF input; the buffer splits on \n only
            line = line[:-1]
        if self._mode == "text":
            m = _FENCE_OPEN.match(line)
            if m:
                yield from self._close_block()
                self._mode = "code"
                info = m.group(1).strip()
                self._language = info.split()[0] if info else ""
                return
            yield from self._append_line(line)
        else:
            if _FENCE_CLOSE.match(line):
                yield from self._close_block()
                self._mode = "text"
                return
            yield from self._append_line(line)

    def _append_line(self, line: str) -> Iterator[BlockEvent]:
        if not self._open_emitted:
            self._open_emitted = True
            yield BlockEvent(action="open", kind=self._mode)
        self._lines.append(line)
        yield BlockEvent(action="delta", kind=self._mode, line=line)

    def _close_block(self, unterminated: bool = False) -> Iterator[BlockEvent]:
        lines, self._lines = self._lines, []
        open_emitted, self._open_emitted = self._open_emitted, False
        language, self._language = self._language, ""
        if self._mode == "text":
            content = "\n".join(lines).strip()
            if not content:
                return
            block = ParsedBlock(kind="text", content=content)
        else:
            if not open_emitted and not lines and not unterminated:
                # Empty fenced block: keep it, it was explicit in the source.
                block = ParsedBlock(kind="code", content="", language=language)
                yield BlockEvent(action="open", kind="code")
                yield BlockEvent(action="close", kind="code", block=block)
                return
            block = ParsedBlock(
                kind="code",
                content="\n".join(lines),
                language=language,
                unterminated=unterminated,
            )
        if not open_emitted:
            yield BlockEvent(action="open", kind=block.kind)
        yield BlockEvent(action="close", kind=block.kind, block=block)


def parse_blocks(text: str) -> list[ParsedBlock]:
    """Whole-text parse; the oracle the streaming path must agree with."""
    parser = BlockStreamParser()
    events = parser.feed(text)
    events += parser.finish()
    return [e.block for e in events if e.action == "close" and e.block is not None]
