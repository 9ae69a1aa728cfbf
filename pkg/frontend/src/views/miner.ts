/** AI miner view: embedding overview with pure-region dots plus one card
 * per association showing its top-gene bars. Clicking a card expands the
 * full ranked gene list; double-click opens the annotation editor. */

import { el, escapeHtml, round } from "../render/svg.js";
import { colorOf, type ViewState } from "../state.js";
import type {
  AssociationSummary,
  EmbeddingPoint,
  PureRegion,
  RankedGene,
} from "../types.js";

const PLOT = 260;

function scatterSvg(points: EmbeddingPoint[], pure: PureRegion[], state: ViewState): string {
  const maxAbs = Math.max(1e-9, ...points.flatMap((p) => [Math.abs(p.x), Math.abs(p.y)]));
  const scale = PLOT / 2 / (maxAbs * 1.05);
  const sx = (x: number) => round(PLOT / 2 + x * scale);
  const sy = (y: number) => round(PLOT / 2 - y * scale);
  const dots = points
    .map((p) => el("circle", { cx: sx(p.x), cy: sy(p.y), r: 2, class: "cell", opacity: 0.45 }))
    .join("");
  const overlay = pure
    .map((region) =>
      el("circle", {
        cx: sx(region.centroid[0]),
        cy: sy(region.centroid[1]),
        r: 7,
        class: "pure-dot",
        fill: colorOf(state, region.association_index),
        "data-association": region.association_index,
      }),
    )
    .join("");
  return el(
    "svg",
    { viewBox: `0 0 ${PLOT} ${PLOT}`, class: "miner-scatter" },
    dots + overlay,
  );
}

export function barChart(genes: RankedGene[], color: string): string {
  const width = 180;
  const barWidth = genes.length ? width / genes.length : width;
  const bars = genes
    .map((g, i) =>
      el(
        "g",
        { class: "gene-bar", "data-gene": g.gene },
        el("rect", {
          x: round(i * barWidth + 4),
          y: round(70 - 60 * g.importance),
          width: round(barWidth - 8),
          height: round(60 * g.importance),
          fill: color,
        }) +
          el(
            "text",
            { x: round(i * barWidth + barWidth / 2), y: 82, "text-anchor": "middle", class: "bar-label" },
            escapeHtml(g.gene),
          ),
      ),
    )
    .join("");
  return el("svg", { viewBox: `0 0 ${width} 88`, class: "bar-chart" }, bars);
}

export interface MinerViewData {
  associations: AssociationSummary[];
  points: EmbeddingPoint[];
  pureRegions: PureRegion[];
  /** full ranking, present for associations the user expanded */
  expandedRankings: Record<number, RankedGene[]>;
}

export function renderMinerView(data: MinerViewData, state: ViewState): string {
  const cards = data.associations
    .map((assoc) => {
      const color = state.colorMap[assoc.index] ?? colorOf(state, assoc.index);
      const expanded = data.expandedRankings[assoc.index];
      const fullList = expanded
        ? el(
            "ol",
            { class: "full-ranking" },
            expanded
              .map((g) =>
                el(
                  "li",
                  {},
                  `${escapeHtml(g.gene)} ${el("span", { class: "imp" }, String(round(g.importance, 3)))}`,
                ),
              )
              .join(""),
          )
        : "";
      const annotation = assoc.annotation
        ? el("p", { class: "annotation", title: "double-click to edit" }, escapeHtml(assoc.annotation))
        : "";
      return el(
        "section",
        {
          class: "association-card",
          "data-association": assoc.index,
          "data-expanded": expanded ? "true" : "false",
        },
        el("h3", {}, `association ${assoc.index}`) +
          el("input", {
            type: "color",
            class: "color-pick",
            value: color,
            "data-association": assoc.index,
          }) +
          barChart(assoc.top_genes, color) +
          annotation +
          fullList,
      );
    })
    .join("");
  return el(
    "div",
    { class: "miner-view" },
    scatterSvg(data.points, data.pureRegions, state) + el("div", { class: "cards" }, cards),
  );
}
