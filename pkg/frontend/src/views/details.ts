/** Focused-insight pane: collapsible evidence sections plus a pin toggle. */

import { clear, el } from "../dom";
import type { SessionStore } from "../state";
import type { InsightData } from "../types";
import { renderVis } from "./vis";

// (section label, evidence kind, expanded by default)
const SECTIONS: [string, string, boolean][] = [
  ["Data", "data", true],
  ["Code", "code", false],
  ["Code Output", "code_output", false],
  ["Visualization", "visualization", true],
  ["Insight", "nl_explanation", true],
];

export function mountDetails(root: HTMLElement, store: SessionStore): void {
  root.classList.add("insight-details");

  const render = () => {
    clear(root);
    const insight = store.focusId === null ? undefined : store.insights.get(store.focusId);
    if (insight === undefined) {
      root.removeAttribute("data-focus-id");
      root.append(el("p", { class: "placeholder", text: "No insight selected." }));
      return;
    }
    root.setAttribute("data-focus-id", insight.insight_id);

    const pin = el("button", {
      class: "pin",
      "aria-pressed": store.pinned ? "true" : "false",
      text: store.pinned ? "Unpin" : "Pin",
    });
    pin.addEventListener("click", () => store.togglePin());

    root.append(
      el("header", { class: "details-header" }, [
        el("h2", { text: insight.summary }),
        pin,
      ]),
      renderScore(store, insight),
    );
    for (const [label, kind, expanded] of SECTIONS) {
      root.append(renderSection(store, insight, label, kind, expanded));
    }
  };
  store.subscribe(render);
  render();
}

function renderScore(store: SessionStore, insight: InsightData): HTMLElement {
  const s = insight.score;
  const parts = [
    `semantic ${s.s_sem}`,
    `statistical ${s.s_stat}`,
    `final ${s.s_final}`,
  ];
  if (s.user_override !== null) parts.push(`override ${s.user_override}`);
  return el("dl", { class: "score-summary" }, [
    el("dt", { text: "Category" }),
    el("dd", { text: insight.category }),
    el("dt", { text: "Transition" }),
    el("dd", { text: insight.transition }),
    el("dt", { text: "Score" }),
    el("dd", { class: "score-parts", text: parts.join(", ") }),
    el("dt", { text: "Rationale" }),
    el("dd", { text: s.rationale }),
    el("dt", { text: "Shown as" }),
    el("dd", { class: "effective-score", text: String(store.effectiveScore(insight)) }),
  ]);
}

function renderSection(
  store: SessionStore,
  insight: InsightData,
  label: string,
  kind: string,
  expanded: boolean,
): HTMLElement {
  const attrs: Record<string, string> = { class: "section", "data-section": kind };
  const section = el("details", attrs, [el("summary", { text: label })]);
  if (expanded) section.setAttribute("open", "");

  if (kind === "data") {
    section.append(
      el("p", { class: "attributes", text: insight.data_context.attributes.join(", ") }),
    );
    for (const action of insight.data_context.actions) {
      section.append(el("p", { class: "action", text: `${action.kind}: ${action.detail}` }));
    }
    return section;
  }
  if (kind === "nl_explanation") {
    section.append(el("p", { class: "statement", text: insight.summary }));
    if (insight.evidence_degraded) {
      section.append(el("p", { class: "degraded", text: "Evidence no longer verifiable." }));
    }
  }
  for (const ref of insight.evidence.filter((r) => r.evidence_kind === kind)) {
    const text = store.resolveEvidence(ref);
    if (kind === "visualization" && text !== null) {
      section.append(renderVis(text));
      continue;
    }
    section.append(
      el("blockquote", {
        class: "evidence-text",
        "data-turn-id": String(ref.turn_id),
        text: text ?? "(source turn unavailable)",
      }),
    );
  }
  return section;
}
