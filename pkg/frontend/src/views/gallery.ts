/** Related-insight gallery for the focused insight.
 *
 * Two card groups: insights sharing data context (with the shared
 * attributes named) and semantic neighbours (with their similarity).
 * The relations come from the API; nothing is recomputed here.
 */

import { clear, el } from "../dom";
import type { SessionStore } from "../state";
import type { InsightData } from "../types";
import { renderVis } from "./vis";

export function mountGallery(root: HTMLElement, store: SessionStore): void {
  root.classList.add("insight-gallery");

  const render = () => {
    clear(root);
    const insight = store.focusId === null ? undefined : store.insights.get(store.focusId);
    if (insight === undefined) {
      root.removeAttribute("data-focus-id");
      root.append(el("p", { class: "placeholder", text: "No insight selected." }));
      return;
    }
    root.setAttribute("data-focus-id", insight.insight_id);

    const dataGroup = el("section", { class: "related-data" }, [
      el("h3", { text: "Shares data" }),
    ]);
    for (const otherId of insight.data_related) {
      const other = store.insights.get(otherId);
      if (other === undefined) continue;
      const shared = insight.data_context.attributes.filter((a) =>
        other.data_context.attributes.includes(a),
      );
      dataGroup.append(card(store, other, shared.join(", ")));
    }

    const semanticGroup = el("section", { class: "related-semantic" }, [
      el("h3", { text: "Similar insights" }),
    ]);
    for (const [otherId, similarity] of insight.semantic_related) {
      const other = store.insights.get(otherId);
      if (other === undefined) continue;
      semanticGroup.append(card(store, other, `similarity ${similarity.toFixed(2)}`));
    }

    root.append(dataGroup, semanticGroup);
  };
  store.subscribe(render);
  render();
}

function card(store: SessionStore, insight: InsightData, note: string): HTMLElement {
  const color = store.colorIndexOf(insight);
  const node = el(
    "div",
    {
      class: "card",
      role: "button",
      tabindex: "0",
      "data-insight-id": insight.insight_id,
      "data-color-index": color === null ? "" : String(color),
    },
    [
      el("span", { class: "card-summary", text: insight.summary }),
      el("span", { class: "card-note", text: note }),
    ],
  );
  const visRef = insight.evidence.find((r) => r.evidence_kind === "visualization");
  const visText = visRef === undefined ? null : store.resolveEvidence(visRef);
  if (visText !== null) {
    const thumb = renderVis(visText);
    thumb.classList.add("card-vis");
    node.append(thumb);
  }
  node.addEventListener("click", () => store.setFocus(insight.insight_id, "gallery"));
  return node;
}
