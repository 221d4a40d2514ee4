/** Render a declarative chart spec as inline SVG.
 *
 * Specs carry {data, encoding: {x, y}, mark, title}; bar, line, and point
 * marks get simple geometric renderings. Content that is not a spec falls
 * back to an image (for raster artifacts) or preformatted text.
 */

import { el } from "../dom";

const WIDTH = 200;
const HEIGHT = 120;
const PLOT_TOP = 18;
const PLOT_BOTTOM = 104;

interface ChartSpec {
  data: Record<string, unknown>[];
  encoding: { x: string; y: string };
  mark: string;
  title?: string;
}

export function renderVis(content: string): HTMLElement {
  const spec = parseSpec(content);
  if (spec === null) return fallback(content);
  const figure = el("figure", { class: "vis" });
  figure.append(drawChart(spec));
  return figure;
}

function parseSpec(content: string): ChartSpec | null {
  let raw: unknown;
  try {
    raw = JSON.parse(content);
  } catch {
    return null;
  }
  if (typeof raw !== "object" || raw === null) return null;
  const spec = raw as Partial<ChartSpec>;
  if (typeof spec.mark !== "string" || !Array.isArray(spec.data)) return null;
  if (typeof spec.encoding?.x !== "string" || typeof spec.encoding?.y !== "string") return null;
  return spec as ChartSpec;
}

function fallback(content: string): HTMLElement {
  if (content.startsWith("data:image/") || /\.(png|jpe?g|gif|svg)$/i.test(content.trim())) {
    const figure = el("figure", { class: "vis raster" });
    figure.append(el("img", { src: content.trim(), alt: "chart artifact" }));
    return figure;
  }
  return el("figure", { class: "vis raw" }, [el("pre", { text: content })]);
}

function svgEl(tag: string, attrs: Record<string, string>): SVGElement {
  const node = document.createElementNS("http://www.w3.org/2000/svg", tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  return node;
}

function drawChart(spec: ChartSpec): SVGElement {
  const svg = svgEl("svg", {
    viewBox: `0 0 ${WIDTH} ${HEIGHT}`,
    class: `chart mark-${spec.mark}`,
    role: "img",
  });
  if (spec.title !== undefined) {
    const title = svgEl("text", { x: "4", y: "12", class: "chart-title" });
    title.textContent = spec.title;
    svg.append(title);
  }
  const ys = spec.data.map((row) => Number(row[spec.encoding.y] ?? 0));
  const max = Math.max(...ys.map((y) => Math.abs(y)), 1);
  const slot = WIDTH / Math.max(spec.data.length, 1);
  const points: [number, number][] = ys.map((y, i) => [
    slot * i + slot / 2,
    PLOT_BOTTOM - ((PLOT_BOTTOM - PLOT_TOP) * Math.abs(y)) / max,
  ]);

  if (spec.mark === "bar") {
    for (const [i, [cx, top]] of points.entries()) {
      svg.append(
        svgEl("rect", {
          x: String(cx - slot * 0.3),
          y: String(top),
          width: String(slot * 0.6),
          height: String(PLOT_BOTTOM - top),
          class: "bar",
          "data-value": String(ys[i]),
        }),
      );
    }
  } else if (spec.mark === "line") {
    svg.append(
      svgEl("polyline", {
        points: points.map(([x, y]) => `${x},${y}`).join(" "),
        class: "line",
        fill: "none",
      }),
    );
  } else {
    for (const [i, [cx, cy]] of points.entries()) {
      svg.append(
        svgEl("circle", {
          cx: String(cx),
          cy: String(cy),
          r: "3",
          class: "point",
          "data-value": String(ys[i]),
        }),
      );
    }
  }

  for (const [i, row] of spec.data.entries()) {
    const label = svgEl("text", {
      x: String(slot * i + slot / 2),
      y: String(HEIGHT - 4),
      "text-anchor": "middle",
      class: "x-label",
    });
    label.textContent = String(row[spec.encoding.x] ?? "");
    svg.append(label);
  }
  return svg;
}
