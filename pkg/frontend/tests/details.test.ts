import { beforeEach, describe, expect, it } from "vitest";

import { SessionStore } from "../src/state";
import { mountDetails } from "../src/views/details";
import { fullSnapshot, TURN_ONE_TEXT } from "./fixtures";

let root: HTMLElement;
let store: SessionStore;

beforeEach(() => {
  document.body.innerHTML = "";
  root = document.createElement("aside");
  document.body.append(root);
  store = new SessionStore();
  store.loadSnapshot(fullSnapshot());
  mountDetails(root, store);
});

describe("section layout", () => {
  it("shows a placeholder until something is focused", () => {
    expect(root.querySelector(".placeholder")).not.toBeNull();
    expect(root.getAttribute("data-focus-id")).toBeNull();
  });

  it("renders the five sections, code ones collapsed", () => {
    store.setFocus("a1", "dot");
    const sections = [...root.querySelectorAll("details.section")];
    expect(sections.map((s) => s.getAttribute("data-section"))).toEqual([
      "data",
      "code",
      "code_output",
      "visualization",
      "nl_explanation",
    ]);
    const open = Object.fromEntries(
      sections.map((s) => [s.getAttribute("data-section"), s.hasAttribute("open")]),
    );
    expect(open).toEqual({
      data: true,
      code: false,
      code_output: false,
      visualization: true,
      nl_explanation: true,
    });
    expect(root.getAttribute("data-focus-id")).toBe("a1");
    expect(root.querySelector("h2")!.textContent).toBe("MPG rises steadily over model years.");
  });

  it("fills sections from the insight's evidence", () => {
    store.setFocus("a1", "dot");
    const code = root.querySelector('details[data-section="code"] .evidence-text')!;
    expect(code.textContent).toBe("df.groupby('year')['MPG'].mean()");
    const statement = root.querySelector('details[data-section="nl_explanation"] .evidence-text')!;
    expect(statement.textContent).toBe(TURN_ONE_TEXT.slice(8, 26));
    const data = root.querySelector('details[data-section="data"] .attributes')!;
    expect(data.textContent).toBe("MPG");
    expect(root.querySelector('details[data-section="data"] .action')!.textContent).toBe(
      "aggregate: mean",
    );
  });

  it("renders visualization evidence as a chart", () => {
    store.setFocus("a2", "dot");
    const section = root.querySelector('details[data-section="visualization"]')!;
    expect(section.querySelector("svg.chart")).not.toBeNull();
    expect(section.querySelector(".chart-title")!.textContent).toBe("MPG vs Horsepower");
    expect(root.querySelector('details[data-section="code_output"] .evidence-text')!.textContent).toBe(
      "year\n70    17.7\n82    31.0",
    );
  });

  it("shows score parts, rationale, and the effective score", () => {
    store.setFocus("a1", "dot");
    expect(root.querySelector(".score-parts")!.textContent).toBe(
      "semantic 4, statistical 3, final 4",
    );
    expect(root.querySelector(".effective-score")!.textContent).toBe("4");
    store.applyEvent({
      seq: store.lastSeq + 1,
      kind: "score_adjusted",
      payload: { insight_id: "a1", value: 2 },
    });
    expect(root.querySelector(".score-parts")!.textContent).toContain("override 2");
    expect(root.querySelector(".effective-score")!.textContent).toBe("2");
  });
});

describe("pinning", () => {
  it("toggles the pin through the button", () => {
    store.setFocus("a1", "dot");
    const pin = root.querySelector<HTMLButtonElement>("button.pin")!;
    expect(pin.getAttribute("aria-pressed")).toBe("false");
    pin.click();
    expect(store.pinned).toBe(true);
    expect(root.querySelector("button.pin")!.getAttribute("aria-pressed")).toBe("true");
    root.querySelector<HTMLButtonElement>("button.pin")!.click();
    expect(store.pinned).toBe(false);
  });
});

describe("evidence resolution", () => {
  it("slices ranged references and passes whole blocks through", () => {
    const a1 = store.insights.get("a1")!;
    expect(store.resolveEvidence(a1.evidence[0])).toBe(TURN_ONE_TEXT.slice(8, 26));
    expect(store.resolveEvidence(a1.evidence[1])).toBe("df.groupby('year')['MPG'].mean()");
    expect(
      store.resolveEvidence({ turn_id: 9, block_index: 0, evidence_kind: "code", char_range: null }),
    ).toBeNull();
  });
});
