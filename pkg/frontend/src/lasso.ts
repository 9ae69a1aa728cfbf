/** Lasso selection: close the polygon, keep the cells strictly inside
 * (even-odd rule), and create the region through the API. The UI never
 * stores regions itself; the service is the source of truth. */

import type { CellscoutClient } from "./api.js";
import { pointInPolygon, type Point } from "./geometry.js";
import type { EmbeddingPoint, RegionRecord } from "./types.js";
import { screenPosition } from "./views/exploration.js";

export interface LassoResult {
  region: RegionRecord | null;
  /** set when no region was created */
  reason?: "degenerate-polygon" | "empty-selection";
  insideCellIds: string[];
}

export function cellsInsideLasso(polygon: Point[], points: EmbeddingPoint[]): string[] {
  if (polygon.length < 3) {
    return [];
  }
  const maxR = Math.max(1e-9, ...points.map((p) => p.r));
  return points
    .filter((point) => pointInPolygon(screenPosition(point, maxR), polygon))
    .map((point) => point.cell_id);
}

export async function completeLasso(
  polygon: Point[],
  points: EmbeddingPoint[],
  client: CellscoutClient,
  datasetId: string,
  name: string,
): Promise<LassoResult> {
  if (polygon.length < 3) {
    return { region: null, reason: "degenerate-polygon", insideCellIds: [] };
  }
  const inside = cellsInsideLasso(polygon, points);
  if (inside.length === 0) {
    return { region: null, reason: "empty-selection", insideCellIds: [] };
  }
  const region = await client.createRegion(datasetId, name, inside);
  return { region, insideCellIds: inside };
}
