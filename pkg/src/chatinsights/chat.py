"""The analysis chatbot loop: prompt, stream, execute, interpret.

A turn starts from the user query. The assistant reply streams through
the fenced-block parser; every code block it contains is executed, the
combined output is fed back for interpretation, and the cycle repeats up
to a bounded number of interpret-execute iterations. A reply without code
ends the turn.

The caller supplies completion callbacks, so the engine can translate
parser activity directly into session events.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

from .blocks import BlockStreamParser, ParsedBlock
from .executor import ExecutionResult
from .gateway import ChatMessage, ChatRequest
from .model import canonical_json

logger = logging.getLogger(__name__)

INTERPRET_CAP = 4


@dataclass(frozen=True)
class TurnBlock:
    kind: str  # text | code | code_output | visualization
    content: str


class DatasetMissingError(RuntimeError):
    pass


def render_execution_output(result: ExecutionResult, timeout_s: float) -> str:
    """Code-output block content: stdout, plus stderr or a timeout notice."""
    parts = [result.stdout] if result.stdout else []
    if result.timed_out:
        parts.append(f"[execution timed out after {timeout_s:g} s]")
    elif result.exit_code != 0:
        if result.stderr:
            parts.append(result.stderr)
        parts.append(f"[exited with status {result.exit_code}]")
    return "\n".join(parts).strip() or "(no output)"


def run_turn(
    provider,
    executor,
    messages: list[ChatMessage],
    user_query: str,
    dataset_path: Optional[Path],
    on_block: Callable[[TurnBlock], None],
    on_delta: Optional[Callable[[str], None]] = None,
    interpret_cap: int = INTERPRET_CAP,
    executor_timeout_s: float = 30.0,
) -> list[TurnBlock]:
    """Drive one conversation turn; returns the ordered block list.

    ``messages`` is the running chat history (system prompt first); it is
    extended in place with this turn's exchanges so the next turn sees the
    full conversation. Provider errors propagate to the caller.
    """
    messages.append(ChatMessage(role="user", content=user_query))
    blocks: list[TurnBlock] = []

    def finish_block(parsed: ParsedBlock) -> None:
        block = TurnBlock(kind=parsed.kind, content=parsed.content)
        blocks.append(block)
        on_block(block)

    for _round in range(interpret_cap):
        parser = BlockStreamParser()
        pending: list[ParsedBlock] = []

        def sink(delta: str) -> None:
            if on_delta is not None:
                on_delta(delta)
            for event in parser.feed(delta):
                if event.action == "close":
                    pending.append(event.block)

        response = provider.complete(
            ChatRequest(channel="analysis", messages=tuple(messages)), stream_sink=sink
        )
        for event in parser.finish():
            if event.action == "close":
                pending.append(event.block)

        messages.append(ChatMessage(role="assistant", content=response.content))

        code_blocks = []
        for parsed in pending:
            finish_block(parsed)
            if parsed.kind == "code":
                code_blocks.append(parsed)

        if not code_blocks:
            return blocks

        outputs = []
        for parsed in code_blocks:
            result = executor.run(parsed.content, dataset_path)
            content = render_execution_output(result, executor_timeout_s)
            finish_block(TurnBlock(kind="code_output", content=content))
            outputs.append(content)
            for artifact in result.artifacts:
                finish_block(
                    TurnBlock(kind="visualization", content=canonical_json(artifact.spec))
                )
        messages.append(
            ChatMessage(
                role="user",
                content="Execution output:\n" + "\n---\n".join(outputs),
            )
        )

    logger.warning("interpret-execute cap (%d) reached; turn ends on output", interpret_cap)
    return blocks
