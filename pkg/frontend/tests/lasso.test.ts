import { describe, expect, it } from "vitest";

import { CellscoutClient } from "../src/api.js";
import { cellsInsideLasso, completeLasso } from "../src/lasso.js";
import type { EmbeddingPoint } from "../src/types.js";
import { PLOT_SIZE, screenPosition } from "../src/views/exploration.js";

/** Two cells near the plot center plus a ring of distant cells. */
function fixturePoints(): EmbeddingPoint[] {
  const mk = (id: string, r: number, theta: number): EmbeddingPoint => ({
    cell_id: id,
    x: r * Math.cos(theta),
    y: r * Math.sin(theta),
    r,
    theta,
  });
  return [
    mk("near-a", 0.05, 0.3),
    mk("near-b", 0.08, 2.1),
    ...Array.from({ length: 12 }, (_, i) => mk(`far-${i}`, 1.0, (i * Math.PI) / 6)),
  ];
}

function fakeFetch(capture: { url?: string; body?: unknown }) {
  return async (url: string, init?: RequestInit): Promise<Response> => {
    capture.url = url;
    capture.body = init?.body ? JSON.parse(String(init.body)) : undefined;
    const parsed = capture.body as { name: string; cell_ids: string[] };
    const payload = {
      id: "r-fake",
      name: parsed.name,
      origin: "lasso",
      cell_ids: parsed.cell_ids,
    };
    return new Response(JSON.stringify(payload), {
      status: 201,
      headers: { "content-type": "application/json" },
    });
  };
}

describe("cellsInsideLasso", () => {
  it("keeps exactly the two central cells for a box around the center", () => {
    const points = fixturePoints();
    const c = PLOT_SIZE / 2;
    const box = [
      { x: c - 30, y: c - 30 },
      { x: c + 30, y: c - 30 },
      { x: c + 30, y: c + 30 },
      { x: c - 30, y: c + 30 },
    ];
    expect(cellsInsideLasso(box, points).sort()).toEqual(["near-a", "near-b"]);
  });

  it("returns everything for a polygon around the whole plot", () => {
    const points = fixturePoints();
    const hull = [
      { x: -10, y: -10 },
      { x: PLOT_SIZE + 10, y: -10 },
      { x: PLOT_SIZE + 10, y: PLOT_SIZE + 10 },
      { x: -10, y: PLOT_SIZE + 10 },
    ];
    expect(cellsInsideLasso(hull, points)).toHaveLength(points.length);
  });

  it("rejects a two-vertex path", () => {
    expect(cellsInsideLasso([{ x: 0, y: 0 }, { x: 5, y: 5 }], fixturePoints())).toEqual([]);
  });
});

describe("completeLasso", () => {
  it("creates a region of size 2 through the API for the 2-cell fixture", async () => {
    const capture: { url?: string; body?: unknown } = {};
    const client = new CellscoutClient("", fakeFetch(capture));
    const points = fixturePoints();
    const c = PLOT_SIZE / 2;
    const box = [
      { x: c - 30, y: c - 30 },
      { x: c + 30, y: c - 30 },
      { x: c + 30, y: c + 30 },
      { x: c - 30, y: c + 30 },
    ];
    const outcome = await completeLasso(box, points, client, "d-1", "picked");
    expect(capture.url).toBe("/datasets/d-1/regions");
    expect((capture.body as { cell_ids: string[] }).cell_ids).toHaveLength(2);
    expect(outcome.region?.cell_ids).toHaveLength(2);
    expect(outcome.insideCellIds.sort()).toEqual(["near-a", "near-b"]);
  });

  it("creates nothing for an empty selection", async () => {
    const capture: { url?: string } = {};
    const client = new CellscoutClient("", fakeFetch(capture));
    const tiny = [
      { x: 1, y: 1 },
      { x: 2, y: 1 },
      { x: 2, y: 2 },
    ];
    const outcome = await completeLasso(tiny, fixturePoints(), client, "d-1", "none");
    expect(outcome.region).toBeNull();
    expect(outcome.reason).toBe("empty-selection");
    expect(capture.url).toBeUndefined(); // no API call without cells
  });

  it("rejects degenerate polygons before touching the API", async () => {
    const capture: { url?: string } = {};
    const client = new CellscoutClient("", fakeFetch(capture));
    const outcome = await completeLasso(
      [{ x: 0, y: 0 }, { x: 9, y: 9 }],
      fixturePoints(),
      client,
      "d-1",
      "degenerate",
    );
    expect(outcome.reason).toBe("degenerate-polygon");
    expect(capture.url).toBeUndefined();
  });

  it("maps screen positions consistently with the renderer", () => {
    const points = fixturePoints();
    const maxR = Math.max(...points.map((p) => p.r));
    const pos = screenPosition(points[0]!, maxR);
    expect(pos.x).toBeGreaterThan(0);
    expect(pos.x).toBeLessThan(PLOT_SIZE);
  });
});
