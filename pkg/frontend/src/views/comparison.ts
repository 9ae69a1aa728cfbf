/** Comparison view: rows are selected regions, columns are associations,
 * each cell draws the region's relevance as donut rings. One full ring is
 * the dataset upper quartile; values past a full ring add the smaller
 * embedded donut. */

import { arcPath, ringBreakdown } from "../geometry.js";
import { el, escapeHtml, round } from "../render/svg.js";
import { colorOf, type ViewState } from "../state.js";
import type { RegionRecord, RelevanceProfile } from "../types.js";

const CELL = 56;

export function donutCell(rings: number, color: string): string {
  const { outer, inner, saturated } = ringBreakdown(rings);
  const c = CELL / 2;
  const parts: string[] = [
    el("circle", { cx: c, cy: c, r: 20, class: "donut-track" }),
  ];
  if (outer > 0) {
    parts.push(
      el("path", { d: arcPath(c, c, 20, outer), class: "donut-arc", stroke: color }),
    );
  }
  if (inner > 0) {
    parts.push(
      el("circle", { cx: c, cy: c, r: 12, class: "donut-track inner" }),
      el("path", { d: arcPath(c, c, 12, inner), class: "donut-arc inner", stroke: color }),
    );
  }
  if (saturated) {
    parts.push(el("circle", { cx: c, cy: c, r: 3, class: "donut-overflow" }));
  }
  return el(
    "svg",
    {
      viewBox: `0 0 ${CELL} ${CELL}`,
      class: "donut",
      "data-rings": round(rings, 4),
      "data-outer": round(outer, 4),
      "data-inner": round(inner, 4),
    },
    parts.join(""),
  );
}

export interface ComparisonData {
  regions: RegionRecord[];
  profiles: Record<string, RelevanceProfile>;
  associationCount: number;
}

export function renderComparisonView(data: ComparisonData, state: ViewState): string {
  const selected = data.regions.filter((r) => state.selectedRegions.includes(r.id));
  if (selected.length === 0) {
    return el("p", { class: "empty-hint" }, "lasso-select regions to compare them");
  }
  const header = el(
    "tr",
    {},
    el("th", {}, "region") +
      Array.from({ length: data.associationCount }, (_, u) =>
        el("th", { style: `color:${colorOf(state, u)}` }, `a${u}`),
      ).join("") +
      el("th", {}, ""),
  );
  const rows = selected
    .map((region) => {
      const profile = data.profiles[region.id];
      const cells = Array.from({ length: data.associationCount }, (_, u) => {
        const rings = profile?.rings[u] ?? 0;
        return el("td", {}, donutCell(rings, colorOf(state, u)));
      }).join("");
      return el(
        "tr",
        { "data-region": region.id },
        el("td", { class: "region-name" }, escapeHtml(region.name)) +
          cells +
          el(
            "td",
            {},
            el("button", { class: "remove-region", "data-region": region.id, title: "remove" }, "x"),
          ),
      );
    })
    .join("");
  return el("table", { class: "comparison-view" }, header + rows);
}
