/** Conversation view: turns with insight dots and evidence highlighting.
 *
 * Scroll position maps to a turn through a fixed per-turn height so the
 * mapping is deterministic without layout (and therefore testable).
 */

import { clear, el } from "../dom";
import type { SessionStore } from "../state";
import type { BlockData, EvidenceRefData, InsightData, TurnData } from "../types";
import { renderVis } from "./vis";

export const TURN_PIXELS = 160;

export function mountChat(root: HTMLElement, store: SessionStore): void {
  root.classList.add("chat-window");
  const list = el("div", { class: "turn-list" });
  root.append(list);

  root.addEventListener("scroll", () => {
    const ids = [...store.turns.keys()].sort((a, b) => a - b);
    if (ids.length === 0) return;
    const index = Math.min(Math.floor(root.scrollTop / TURN_PIXELS), ids.length - 1);
    const first = store.insightsForTurn(ids[Math.max(index, 0)])[0];
    if (first !== undefined) store.setFocus(first.insight_id, "scroll");
  });

  const render = () => {
    clear(list);
    const focused = store.focusId === null ? undefined : store.insights.get(store.focusId);
    for (const id of [...store.turns.keys()].sort((a, b) => a - b)) {
      list.append(renderTurn(store, store.turns.get(id)!, focused));
    }
    if (store.pendingTurn !== null) {
      list.append(renderPending(store));
    }
  };
  store.subscribe(render);
  render();
}

function renderTurn(
  store: SessionStore,
  turn: TurnData,
  focused: InsightData | undefined,
): HTMLElement {
  const refs = focused === undefined ? [] : focused.evidence.filter((r) => r.turn_id === turn.turn_id);
  const node = el("article", { class: "turn", "data-turn-id": String(turn.turn_id) }, [
    el("p", { class: "user-query", text: turn.user_query }),
    renderDots(store, turn.turn_id),
  ]);
  for (const block of turn.blocks) {
    node.append(renderBlock(block, refs));
  }
  return node;
}

function renderPending(store: SessionStore): HTMLElement {
  const pending = store.pendingTurn!;
  const node = el("article", {
    class: "turn streaming",
    "data-turn-id": String(pending.turn_id),
  });
  node.append(el("p", { class: "user-query", text: pending.user_query }));
  for (const block of pending.blocks) {
    node.append(renderBlock(block, []));
  }
  if (pending.live_text !== "") {
    node.append(el("p", { class: "block live-text", text: pending.live_text }));
  }
  return node;
}

function renderDots(store: SessionStore, turnId: number): HTMLElement {
  const row = el("div", { class: "dot-row" });
  for (const insight of store.insightsForTurn(turnId)) {
    const color = store.colorIndexOf(insight);
    const dot = el("button", {
      class: insight.insight_id === store.focusId ? "dot focused" : "dot",
      "data-insight-id": insight.insight_id,
      "data-color-index": color === null ? "" : String(color),
      title: insight.summary,
    });
    dot.addEventListener("click", () => store.setFocus(insight.insight_id, "dot"));
    row.append(dot);
  }
  return row;
}

function renderBlock(block: BlockData, refs: EvidenceRefData[]): HTMLElement {
  const hits = refs.filter((r) => r.block_index === block.block_index);
  const hit = hits.length > 0;
  if (block.kind === "text") {
    const node = el("p", { class: "block text" + (hit ? " evidence-hit" : "") });
    appendHighlighted(node, block.content, hits);
    return node;
  }
  if (block.kind === "visualization") {
    const node = renderVis(block.content);
    node.classList.add("block", "visualization");
    if (hit) node.classList.add("evidence-hit");
    return node;
  }
  return el("pre", { class: `block ${block.kind}` + (hit ? " evidence-hit" : "") }, [
    el("code", { text: block.content }),
  ]);
}

/** Append content with <mark> wrapped around each referenced char range. */
function appendHighlighted(node: HTMLElement, content: string, refs: EvidenceRefData[]): void {
  const ranges = refs
    .map((r) => r.char_range)
    .filter((r): r is [number, number] => r !== null)
    .sort((a, b) => a[0] - b[0]);
  if (ranges.length === 0) {
    node.textContent = content;
    return;
  }
  let cursor = 0;
  for (const [start, end] of ranges) {
    if (start < cursor) continue;
    if (start > cursor) node.append(content.slice(cursor, start));
    node.append(el("mark", { class: "evidence", text: content.slice(start, end) }));
    cursor = end;
  }
  if (cursor < content.length) node.append(content.slice(cursor));
}
