/** App bootstrap: owns the DOM, wires events to API calls, and re-renders
 * the four views from fresh state. All analytics come from the service;
 * this file only routes data. */

import { ApiError, CellscoutClient } from "./api.js";
import type { Point } from "./geometry.js";
import { completeLasso } from "./lasso.js";
import {
  appendCard,
  assignColor,
  dropRegion,
  initialState,
  loadState,
  moveGlyph,
  pinGlyph,
  saveState,
  selectRegion,
  setHover,
  type ViewState,
} from "./state.js";
import type {
  AssociationSummary,
  DatasetInfo,
  EmbeddingPoint,
  PureRegion,
  RadialHistogram,
  RankedGene,
  RegionRecord,
  RelevanceProfile,
} from "./types.js";
import { renderComparisonView } from "./views/comparison.js";
import { renderExplorationView } from "./views/exploration.js";
import { renderMinerView } from "./views/miner.js";
import { renderVerificationView } from "./views/verification.js";

interface Caches {
  info: DatasetInfo | null;
  associations: AssociationSummary[];
  points: EmbeddingPoint[];
  pureRegions: PureRegion[];
  relevances: Record<number, number[]>;
  regions: RegionRecord[];
  profiles: Record<string, RelevanceProfile>;
  expandedRankings: Record<number, RankedGene[]>;
  glyphHistograms: Record<string, RadialHistogram>;
  pickedGenes: string[];
  lasso: Point[];
}

const client = new CellscoutClient("");
let state: ViewState = typeof localStorage !== "undefined" ? loadState(localStorage) : initialState();
const caches: Caches = {
  info: null,
  associations: [],
  points: [],
  pureRegions: [],
  relevances: {},
  regions: [],
  profiles: {},
  expandedRankings: {},
  glyphHistograms: {},
  pickedGenes: [],
  lasso: [],
};

function byId(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing #${id}`);
  }
  return node;
}

function toast(message: string): void {
  const node = byId("toast");
  node.textContent = message;
  node.classList.add("visible");
  setTimeout(() => node.classList.remove("visible"), 2500);
}

function persist(): void {
  if (typeof localStorage !== "undefined") {
    saveState(state, localStorage);
  }
}

function update(next: ViewState): void {
  state = next;
  persist();
  render();
}

function render(): void {
  byId("miner").innerHTML = renderMinerView(
    {
      associations: caches.associations,
      points: caches.points,
      pureRegions: caches.pureRegions,
      expandedRankings: caches.expandedRankings,
    },
    state,
  );
  const lastSelected = state.selectedRegions[state.selectedRegions.length - 1];
  byId("exploration").innerHTML = renderExplorationView(
    {
      points: caches.points,
      associations: caches.associations,
      relevances: caches.relevances,
      selectedProfile: lastSelected ? caches.profiles[lastSelected] ?? null : null,
      glyphHistograms: caches.glyphHistograms,
      lasso: caches.lasso,
    },
    state,
  );
  byId("comparison").innerHTML = renderComparisonView(
    {
      regions: caches.regions,
      profiles: caches.profiles,
      associationCount: caches.associations.length,
    },
    state,
  );
  byId("verification").innerHTML = renderVerificationView(
    {
      regions: caches.regions,
      associations: caches.associations,
      pickedGenes: caches.pickedGenes,
    },
    state,
  );
  wireViewEvents();
}

async function loadDataset(datasetId: string): Promise<void> {
  caches.info = await client.datasetInfo(datasetId);
  if (!caches.info.trained) {
    byId("status").textContent = "dataset is not trained yet; start a run below";
    return;
  }
  const [associations, embedding, pure, regions] = await Promise.all([
    client.associations(datasetId),
    client.embedding(datasetId),
    client.pureRegions(datasetId),
    client.listRegions(datasetId),
  ]);
  caches.associations = associations;
  caches.points = embedding.points;
  caches.pureRegions = pure.pure_regions;
  caches.regions = regions;
  caches.relevances = {};
  await Promise.all(
    associations.map(async (assoc) => {
      const payload = await client.relevance(datasetId, assoc.index);
      caches.relevances[assoc.index] = payload.relevance;
    }),
  );
  for (const assoc of associations) {
    if (assoc.color) {
      state = assignColor(state, assoc.index, assoc.color);
    }
  }
  await Promise.all(
    regions
      .filter((region) => state.selectedRegions.includes(region.id))
      .map(async (region) => {
        caches.profiles[region.id] = await client.regionProfile(datasetId, region.id);
      }),
  );
  byId("status").textContent =
    `${caches.info.cells} cells, ${caches.info.genes} genes, k=${caches.info.k}`;
  render();
}

function datasetId(): string {
  if (!state.selectedDataset) {
    throw new Error("no dataset selected");
  }
  return state.selectedDataset;
}

async function onLassoComplete(): Promise<void> {
  const polygon = caches.lasso;
  caches.lasso = [];
  const name = `region ${caches.regions.length + 1}`;
  try {
    const outcome = await completeLasso(polygon, caches.points, client, datasetId(), name);
    if (!outcome.region) {
      toast(outcome.reason === "empty-selection" ? "no cells inside the lasso" : "draw a larger shape");
      render();
      return;
    }
    caches.regions = await client.listRegions(datasetId());
    caches.profiles[outcome.region.id] = await client.regionProfile(datasetId(), outcome.region.id);
    update(selectRegion(state, outcome.region.id));
  } catch (error) {
    toast(error instanceof ApiError ? `${error.code}: ${error.message}` : String(error));
  }
}

function wireViewEvents(): void {
  // miner: expand rankings, recolor, annotate
  document.querySelectorAll<HTMLElement>(".association-card").forEach((card) => {
    const index = Number(card.dataset.association);
    card.onclick = async (event) => {
      if ((event.target as HTMLElement).closest(".color-pick")) {
        return;
      }
      if (card.dataset.expanded !== "true") {
        const payload = await client.importance(datasetId(), index, true);
        caches.expandedRankings[index] = payload.genes;
        render();
      }
    };
    card.ondblclick = async () => {
      const current = caches.associations[index]?.annotation ?? "";
      const text = window.prompt("annotation", current);
      if (text !== null) {
        await client.patchAssociation(datasetId(), index, { annotation: text });
        caches.associations = await client.associations(datasetId());
        render();
      }
    };
  });
  document.querySelectorAll<HTMLInputElement>(".color-pick").forEach((input) => {
    input.onchange = async () => {
      const index = Number(input.dataset.association);
      await client.patchAssociation(datasetId(), index, { color: input.value });
      update(assignColor(state, index, input.value));
    };
  });

  // exploration: hover nodes, pin glyphs by clicking a node, lasso drawing
  document.querySelectorAll<SVGGElement>(".association-node").forEach((node) => {
    const index = Number(node.dataset.association);
    node.onmouseenter = () => update(setHover(state, index));
    node.onmouseleave = () => update(setHover(state, null));
    node.onclick = async () => {
      const payload = await client.importance(datasetId(), index, false);
      const gene = payload.genes[0]?.gene;
      const regionId = state.selectedRegions[state.selectedRegions.length - 1];
      if (!gene || !regionId) {
        toast("select a region first, then click a node to pin its top gene");
        return;
      }
      caches.glyphHistograms[`${index}:${gene}`] = await client.geneDistribution(
        datasetId(),
        regionId,
        gene,
      );
      update(pinGlyph(state, index, gene));
    };
  });
  const plot = document.querySelector<SVGSVGElement>(".exploration-view");
  if (plot) {
    let drawing = false;
    const toLocal = (event: PointerEvent): Point => {
      const rect = plot.getBoundingClientRect();
      const scale = plot.viewBox.baseVal.width / rect.width;
      return { x: (event.clientX - rect.left) * scale, y: (event.clientY - rect.top) * scale };
    };
    plot.onpointerdown = (event) => {
      if ((event.target as Element).closest(".association-node")) {
        return;
      }
      drawing = true;
      caches.lasso = [toLocal(event)];
    };
    plot.onpointermove = (event) => {
      if (drawing) {
        caches.lasso.push(toLocal(event));
        render();
      }
    };
    plot.onpointerup = () => {
      if (drawing) {
        drawing = false;
        void onLassoComplete();
      }
    };
    document.querySelectorAll<SVGGElement>(".gene-glyph").forEach((glyph) => {
      glyph.onpointerdown = (event) => {
        event.stopPropagation();
        const gene = glyph.dataset.gene ?? "";
        const node = glyph.closest<SVGGElement>(".association-node");
        const association = Number(node?.dataset.association ?? -1);
        const start = toLocal(event);
        const origin = state.pinnedGlyphs[association]?.find((g) => g.gene === gene);
        if (!origin) {
          return;
        }
        const base = { dx: origin.dx, dy: origin.dy };
        const onMove = (move: PointerEvent) => {
          const now = toLocal(move);
          update(
            moveGlyph(state, association, gene, base.dx + now.x - start.x, base.dy + now.y - start.y),
          );
        };
        const onUp = () => {
          document.removeEventListener("pointermove", onMove);
          document.removeEventListener("pointerup", onUp);
        };
        document.addEventListener("pointermove", onMove);
        document.addEventListener("pointerup", onUp);
      };
    });
  }

  // comparison: remove rows
  document.querySelectorAll<HTMLButtonElement>(".remove-region").forEach((button) => {
    button.onclick = async () => {
      const regionId = button.dataset.region ?? "";
      await client.deleteRegion(datasetId(), regionId);
      caches.regions = await client.listRegions(datasetId());
      delete caches.profiles[regionId];
      update(dropRegion(state, regionId));
    };
  });

  // verification: pick genes, choose regions, run, refine
  document
    .querySelectorAll<HTMLInputElement>(".gene-picker input[type=checkbox]")
    .forEach((box) => {
      box.onchange = () => {
        caches.pickedGenes = box.checked
          ? [...caches.pickedGenes, box.value]
          : caches.pickedGenes.filter((g) => g !== box.value);
        render();
      };
    });
  const positive = document.querySelector<HTMLSelectElement>(".positive-region");
  const negative = document.querySelector<HTMLSelectElement>(".negative-region");
  if (positive) {
    positive.onchange = () => update({ ...state, positiveRegion: positive.value });
  }
  if (negative) {
    negative.onchange = () => update({ ...state, negativeRegion: negative.value });
  }
  const run = document.querySelector<HTMLButtonElement>(".run-verify");
  if (run) {
    run.onclick = async () => {
      if (!state.positiveRegion || !state.negativeRegion || caches.pickedGenes.length === 0) {
        toast("pick genes and both regions first");
        return;
      }
      try {
        const card = await client.verify(
          datasetId(),
          caches.pickedGenes,
          state.positiveRegion,
          state.negativeRegion,
        );
        update(appendCard(state, card));
      } catch (error) {
        toast(error instanceof ApiError ? `${error.code}: ${error.message}` : String(error));
      }
    };
  }
  document.querySelectorAll<HTMLButtonElement>(".refine-from").forEach((button) => {
    button.onclick = () => {
      const order = Number(button.dataset.order);
      const card = state.verificationCards.find((c) => c.order === order);
      if (card) {
        caches.pickedGenes = [...card.genes];
        render();
        toast("genes loaded into the picker; adjust and verify again");
      }
    };
  });
}

async function pollTraining(jobId: string): Promise<void> {
  const status = await client.jobStatus(jobId);
  byId("status").textContent =
    `training: ${status.state} ${status.progress.epoch}/${status.progress.total}`;
  if (status.state === "done") {
    await loadDataset(datasetId());
  } else if (status.state === "failed") {
    toast(status.error ?? "training failed");
  } else {
    setTimeout(() => void pollTraining(jobId), 800);
  }
}

async function bootstrap(): Promise<void> {
  const select = byId("dataset-select") as HTMLSelectElement;
  const datasets = await client.listDatasets();
  select.innerHTML = datasets
    .map((d) => `<option value="${d.dataset_id}">${d.name} (${d.cells} cells)</option>`)
    .join("");
  select.onchange = () => {
    update({ ...initialState(), selectedDataset: select.value });
    void loadDataset(select.value);
  };
  const trainButton = byId("train-button") as HTMLButtonElement;
  trainButton.onclick = async () => {
    const k = Number((byId("train-k") as HTMLInputElement).value) || 8;
    try {
      const job = await client.startTraining(datasetId(), { k });
      void pollTraining(job.job_id);
    } catch (error) {
      toast(error instanceof ApiError ? `${error.code}: ${error.message}` : String(error));
    }
  };
  const first = state.selectedDataset ?? datasets[0]?.dataset_id ?? null;
  if (first) {
    select.value = first;
    state = { ...state, selectedDataset: first };
    await loadDataset(first);
  }
}

void bootstrap();
