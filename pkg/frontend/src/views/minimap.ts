/** Compact session overview: attribute histogram over per-insight rows.
 *
 * Each row shows topic colour, touched attributes, and a score bar whose
 * width encodes the effective score. Bars and histogram columns are
 * draggable; drags patch the server optimistically and revert on failure.
 * Pixel mappings are fixed constants so drags work without layout.
 */

import type { SessionApi } from "../api";
import { clear, el } from "../dom";
import type { SessionStore } from "../state";
import type { InsightData } from "../types";

export const BAR_UNIT = 24;

interface ScoreDrag {
  kind: "score";
  insightId: string;
  previous: number | null;
  value: number;
}

interface OrderDrag {
  kind: "order";
  attribute: string;
}

export function mountMinimap(root: HTMLElement, store: SessionStore, api: SessionApi): void {
  root.classList.add("insight-minimap");
  let drag: ScoreDrag | OrderDrag | null = null;

  root.addEventListener("pointermove", (event) => {
    if (drag === null || drag.kind !== "score") return;
    drag.value = barValue((event as MouseEvent).clientX);
    store.applyLocalOverride(drag.insightId, drag.value);
  });

  root.addEventListener("pointerup", (event) => {
    if (drag === null) return;
    const active = drag;
    drag = null;
    if (active.kind === "score") {
      commitScore(store, api, active);
      return;
    }
    const target = (event.target as HTMLElement).closest("[data-attribute]");
    const onto = target?.getAttribute("data-attribute") ?? null;
    if (onto !== null && onto !== active.attribute) {
      commitOrder(store, api, active.attribute, onto);
    }
  });

  const render = () => {
    clear(root);
    root.append(renderHistogram(store, (attribute) => {
      drag = { kind: "order", attribute };
    }));
    const rows = el("div", { class: "rows" });
    for (const insight of store.orderedInsights()) {
      rows.append(
        renderRow(store, insight, (insightId, previous, clientX) => {
          drag = { kind: "score", insightId, previous, value: barValue(clientX) };
        }),
      );
    }
    root.append(rows);
  };
  store.subscribe(render);
  render();
}

function barValue(clientX: number): number {
  return Math.min(5, Math.max(1, Math.round(clientX / BAR_UNIT)));
}

async function commitScore(store: SessionStore, api: SessionApi, drag: ScoreDrag): Promise<void> {
  store.applyLocalOverride(drag.insightId, drag.value);
  try {
    const updated = await api.patchScore(drag.insightId, drag.value);
    store.applyLocalOverride(drag.insightId, updated.score.user_override);
  } catch {
    store.applyLocalOverride(drag.insightId, drag.previous);
  }
}

async function commitOrder(
  store: SessionStore,
  api: SessionApi,
  moved: string,
  onto: string,
): Promise<void> {
  const previous = [...store.attributeOrder];
  const order = previous.filter((name) => name !== moved);
  order.splice(order.indexOf(onto) < 0 ? order.length : order.indexOf(onto), 0, moved);
  store.applyLocalOrder(order);
  try {
    store.applyLocalOrder(await api.patchAttributeOrder(order));
  } catch {
    store.applyLocalOrder(previous);
  }
}

function renderHistogram(store: SessionStore, onGrab: (attribute: string) => void): HTMLElement {
  const header = el("div", { class: "histogram" });
  for (const { attribute, count } of store.histogram()) {
    const column = el(
      "div",
      { class: "histogram-column", "data-attribute": attribute, "data-count": String(count) },
      [
        el("span", { class: "column-bar", style: `height: ${count * 6}px` }),
        el("span", { class: "column-label", text: attribute }),
      ],
    );
    column.addEventListener("pointerdown", () => onGrab(attribute));
    header.append(column);
  }
  return header;
}

function renderRow(
  store: SessionStore,
  insight: InsightData,
  onGrab: (insightId: string, previous: number | null, clientX: number) => void,
): HTMLElement {
  const hovered =
    store.hoverTopicId !== null &&
    (insight.topic_id === store.hoverTopicId || insight.subtopic_id === store.hoverTopicId);
  const classes = ["row"];
  if (insight.insight_id === store.focusId) classes.push("focused");
  if (hovered) classes.push("topic-hit");
  const color = store.colorIndexOf(insight);

  const row = el("div", {
    class: classes.join(" "),
    "data-insight-id": insight.insight_id,
    "data-color-index": color === null ? "" : String(color),
    title: `${insight.transition}: ${insight.score.rationale}`,
  });
  row.addEventListener("click", () => store.setFocus(insight.insight_id, "row"));

  const points = el("span", { class: "attr-points" });
  for (const attribute of store.attributeOrder) {
    const on = insight.data_context.attributes.includes(attribute);
    points.append(
      el("span", {
        class: on ? "attr-point on" : "attr-point",
        "data-attribute": attribute,
      }),
    );
  }

  const score = store.effectiveScore(insight);
  const bar = el("span", {
    class: "score-bar",
    role: "slider",
    "aria-valuemin": "1",
    "aria-valuemax": "5",
    "aria-valuenow": String(score),
    style: `width: ${score * BAR_UNIT}px`,
  });
  bar.addEventListener("pointerdown", (event) => {
    event.preventDefault();
    onGrab(insight.insight_id, insight.score.user_override, (event as MouseEvent).clientX);
  });

  row.append(points, bar, el("span", { class: "row-summary", text: insight.summary }));
  return row;
}
