/** Pure geometry used by the views: opacity mapping, lasso hit-testing,
 * association-node placement, donut ring arithmetic. */

import type { EmbeddingPoint } from "./types.js";

export const OPACITY_FLOOR = 0.05;
export const BASE_OPACITY = 0.45;

export function clamp(value: number, lo: number, hi: number): number {
  return Math.min(hi, Math.max(lo, value));
}

/** Linear map from relevance in [0,1] to point opacity in [0.05, 1.0];
 * monotone, so more relevant cells are never fainter. */
export function opacityForRelevance(relevance: number): number {
  return OPACITY_FLOOR + (1 - OPACITY_FLOOR) * clamp(relevance, 0, 1);
}

export interface Point {
  x: number;
  y: number;
}

/** Strict even-odd point-in-polygon test (boundary points count as outside). */
export function pointInPolygon(point: Point, polygon: Point[]): boolean {
  if (polygon.length < 3) {
    return false;
  }
  let inside = false;
  for (let i = 0, j = polygon.length - 1; i < polygon.length; j = i++) {
    const a = polygon[i]!;
    const b = polygon[j]!;
    const crosses =
      a.y > point.y !== b.y > point.y &&
      point.x < ((b.x - a.x) * (point.y - a.y)) / (b.y - a.y) + a.x;
    if (crosses) {
      inside = !inside;
    }
  }
  return inside;
}

/** Circular mean of angles in radians; undefined-resultant case falls back
 * to 0. */
export function circularMeanAngle(angles: number[]): number {
  if (angles.length === 0) {
    return 0;
  }
  let sinSum = 0;
  let cosSum = 0;
  for (const angle of angles) {
    sinSum += Math.sin(angle);
    cosSum += Math.cos(angle);
  }
  if (sinSum === 0 && cosSum === 0) {
    return 0;
  }
  const mean = Math.atan2(sinSum, cosSum);
  return mean < 0 ? mean + 2 * Math.PI : mean;
}

export interface NodePlacement {
  index: number;
  /** angular position, radians in [0, 2*pi) */
  angle: number;
  /** distance from plot center, in units of the plot radius (> 1) */
  radius: number;
}

/**
 * Place one orbit node per association outside the plot.
 *
 * The angle is the circular mean angle of the node's top-relevance cells
 * (top decile by relevance, at least one cell); the radial offset grows
 * with those cells' mean polar radius, so nodes tied to central cells sit
 * close to the plot rim and nodes tied to peripheral cells sit farther out.
 */
export function placeAssociationNodes(
  points: EmbeddingPoint[],
  relevances: number[][],
  innerOffset = 1.12,
  offsetSpan = 0.3,
): NodePlacement[] {
  const maxR = Math.max(1e-12, ...points.map((p) => p.r));
  return relevances.map((relevance, index) => {
    const ranked = points
      .map((point, i) => ({ point, rel: relevance[i] ?? 0 }))
      .sort((a, b) => b.rel - a.rel);
    const take = Math.max(1, Math.floor(ranked.length / 10));
    const top = ranked.slice(0, take);
    const angle = circularMeanAngle(top.map((t) => t.point.theta));
    const meanR = top.reduce((sum, t) => sum + t.point.r, 0) / top.length;
    return { index, angle, radius: innerOffset + offsetSpan * (meanR / maxR) };
  });
}

export interface RingBreakdown {
  /** fraction of the outer ring to draw, in [0, 1] */
  outer: number;
  /** fraction of the embedded inner ring, in [0, 1]; 0 means no inner donut */
  inner: number;
  /** true when the value exceeds what outer + inner can show */
  saturated: boolean;
}

/** Decompose a ring count (mean relevance / dataset upper quartile) into the
 * outer arc plus the overflow ring: 0.5 -> half arc; 1.0 -> full ring;
 * 2.0 -> full ring plus full embedded ring. */
export function ringBreakdown(rings: number): RingBreakdown {
  const safe = Math.max(0, rings);
  return {
    outer: clamp(safe, 0, 1),
    inner: clamp(safe - 1, 0, 1),
    saturated: safe > 2,
  };
}

/** SVG path for a circular arc spanning `fraction` of a circle, starting at
 * 12 o'clock and sweeping clockwise. A full circle is drawn as two arcs. */
export function arcPath(cx: number, cy: number, r: number, fraction: number): string {
  const f = clamp(fraction, 0, 1);
  if (f === 0) {
    return "";
  }
  const start = { x: cx, y: cy - r };
  if (f >= 1) {
    const bottom = { x: cx, y: cy + r };
    return (
      `M ${start.x} ${start.y} A ${r} ${r} 0 0 1 ${bottom.x} ${bottom.y}` +
      ` A ${r} ${r} 0 0 1 ${start.x} ${start.y}`
    );
  }
  const angle = 2 * Math.PI * f - Math.PI / 2;
  const end = { x: cx + r * Math.cos(angle), y: cy + r * Math.sin(angle) };
  const largeArc = f > 0.5 ? 1 : 0;
  return `M ${start.x} ${start.y} A ${r} ${r} 0 ${largeArc} 1 ${end.x} ${end.y}`;
}
