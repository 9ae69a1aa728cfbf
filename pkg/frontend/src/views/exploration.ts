/** Cell exploration view: polar scatter of cells, orbit nodes for the
 * associations, gene glyphs as radial histograms, and a lasso overlay.
 *
 * Hovering an orbit node re-renders every cell with opacity equal to its
 * relevance for that association mapped linearly onto [0.05, 1]; without a
 * hover all cells sit at the base transparency.
 */

import {
  arcPath,
  BASE_OPACITY,
  opacityForRelevance,
  placeAssociationNodes,
  type Point,
} from "../geometry.js";
import { el, escapeHtml, round } from "../render/svg.js";
import { colorOf, type ViewState } from "../state.js";
import type {
  AssociationSummary,
  EmbeddingPoint,
  RadialHistogram,
  RelevanceProfile,
} from "../types.js";

export const PLOT_SIZE = 420;
const CENTER = PLOT_SIZE / 2;
const PLOT_RADIUS = PLOT_SIZE * 0.33;

export interface ExplorationData {
  points: EmbeddingPoint[];
  associations: AssociationSummary[];
  /** per association index: full relevance vector (fetched on demand) */
  relevances: Record<number, number[]>;
  /** profile of the most recently selected region, drawn around the nodes */
  selectedProfile: RelevanceProfile | null;
  /** histograms for pinned gene glyphs, keyed `${association}:${gene}` */
  glyphHistograms: Record<string, RadialHistogram>;
  /** in-progress lasso polygon in screen coordinates */
  lasso: Point[];
}

export function screenPosition(point: EmbeddingPoint, maxR: number): Point {
  const rr = (point.r / maxR) * PLOT_RADIUS;
  return {
    x: CENTER + rr * Math.cos(point.theta),
    y: CENTER - rr * Math.sin(point.theta),
  };
}

export function cellOpacities(
  count: number,
  hovered: number | null,
  relevances: Record<number, number[]>,
): number[] {
  if (hovered === null || !(hovered in relevances)) {
    return Array(count).fill(BASE_OPACITY);
  }
  const relevance = relevances[hovered]!;
  return Array.from({ length: count }, (_, i) => opacityForRelevance(relevance[i] ?? 0));
}

/** Radial histogram glyph: the bin distance from the glyph center encodes
 * the expression level, darkness encodes cell density. */
export function geneGlyph(hist: RadialHistogram, cx: number, cy: number, radius = 18): string {
  const bins = hist.densities.length;
  const ringWidth = radius / Math.max(bins, 1);
  const rings = hist.densities
    .map((density, b) =>
      el("circle", {
        cx: round(cx),
        cy: round(cy),
        r: round((b + 0.5) * ringWidth),
        fill: "none",
        stroke: "#1f3d7a",
        "stroke-width": round(ringWidth),
        "stroke-opacity": round(density, 3),
      }),
    )
    .join("");
  return el(
    "g",
    { class: "gene-glyph", "data-gene": hist.gene },
    rings +
      el("circle", { cx: round(cx), cy: round(cy), r: round(radius), class: "glyph-rim" }) +
      el(
        "text",
        { x: round(cx), y: round(cy + radius + 10), "text-anchor": "middle", class: "glyph-label" },
        escapeHtml(hist.gene),
      ),
  );
}

export function renderExplorationView(data: ExplorationData, state: ViewState): string {
  const maxR = Math.max(1e-9, ...data.points.map((p) => p.r));
  const opacities = cellOpacities(data.points.length, state.hoveredAssociation, data.relevances);

  const cells = data.points
    .map((point, i) => {
      const pos = screenPosition(point, maxR);
      return el("circle", {
        cx: round(pos.x),
        cy: round(pos.y),
        r: 2.4,
        class: "cell",
        "data-cell": point.cell_id,
        "fill-opacity": round(opacities[i] ?? BASE_OPACITY, 3),
      });
    })
    .join("");

  const placements = placeAssociationNodes(
    data.points,
    data.associations.map((a) => data.relevances[a.index] ?? []),
  );
  const nodes = placements
    .map((placement) => {
      const assoc = data.associations[placement.index]!;
      const nodeR = placement.radius * PLOT_RADIUS;
      const cx = CENTER + nodeR * Math.cos(placement.angle);
      const cy = CENTER - nodeR * Math.sin(placement.angle);
      const ringValue = data.selectedProfile?.rings[assoc.index] ?? 0;
      const donut =
        ringValue > 0
          ? el("path", {
              d: arcPath(round(cx), round(cy), 16, Math.min(ringValue, 1)),
              class: "node-ring",
              stroke: colorOf(state, assoc.index),
            }) +
            (ringValue > 1
              ? el("path", {
                  d: arcPath(round(cx), round(cy), 10, Math.min(ringValue - 1, 1)),
                  class: "node-ring inner",
                  stroke: colorOf(state, assoc.index),
                })
              : "")
          : "";
      const glyphs = (state.pinnedGlyphs[assoc.index] ?? [])
        .map((glyph) => {
          const hist = data.glyphHistograms[`${assoc.index}:${glyph.gene}`];
          return hist ? geneGlyph(hist, cx + glyph.dx, cy + glyph.dy) : "";
        })
        .join("");
      return el(
        "g",
        {
          class:
            "association-node" + (state.hoveredAssociation === assoc.index ? " hovered" : ""),
          "data-association": assoc.index,
        },
        el("circle", { cx: round(cx), cy: round(cy), r: 11, fill: colorOf(state, assoc.index) }) +
          el("text", { x: round(cx), y: round(cy + 4), "text-anchor": "middle", class: "node-label" },
            String(assoc.index)) +
          donut +
          glyphs,
      );
    })
    .join("");

  const lasso =
    data.lasso.length >= 2
      ? el("polyline", {
          points: data.lasso.map((p) => `${round(p.x)},${round(p.y)}`).join(" "),
          class: "lasso-path",
        })
      : "";

  return el(
    "svg",
    { viewBox: `0 0 ${PLOT_SIZE} ${PLOT_SIZE}`, class: "exploration-view" },
    el("circle", { cx: CENTER, cy: CENTER, r: PLOT_RADIUS, class: "plot-rim" }) +
      cells +
      nodes +
      lasso,
  );
}
