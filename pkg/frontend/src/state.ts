/** View state: everything the UI remembers between renders. All update
 * functions return fresh objects; prior verification cards are never
 * mutated, so refines stack new cards on top of the history. */

import type { VerificationRecord } from "./types.js";

export const DEFAULT_NODE_COLOR = "#9a9a9a";

export interface GlyphPosition {
  gene: string;
  dx: number;
  dy: number;
}

export interface ViewState {
  selectedDataset: string | null;
  hoveredAssociation: number | null;
  selectedRegions: string[];
  colorMap: Record<number, string>;
  /** per association: the gene glyphs pinned around its node, with drag offsets */
  pinnedGlyphs: Record<number, GlyphPosition[]>;
  verificationCards: VerificationRecord[];
  positiveRegion: string | null;
  negativeRegion: string | null;
}

export function initialState(): ViewState {
  return {
    selectedDataset: null,
    hoveredAssociation: null,
    selectedRegions: [],
    colorMap: {},
    pinnedGlyphs: {},
    verificationCards: [],
    positiveRegion: null,
    negativeRegion: null,
  };
}

export function colorOf(state: ViewState, association: number): string {
  return state.colorMap[association] ?? DEFAULT_NODE_COLOR;
}

export function setHover(state: ViewState, association: number | null): ViewState {
  return { ...state, hoveredAssociation: association };
}

export function assignColor(state: ViewState, association: number, color: string): ViewState {
  return { ...state, colorMap: { ...state.colorMap, [association]: color } };
}

export function selectRegion(state: ViewState, regionId: string): ViewState {
  if (state.selectedRegions.includes(regionId)) {
    return state;
  }
  return { ...state, selectedRegions: [...state.selectedRegions, regionId] };
}

export function dropRegion(state: ViewState, regionId: string): ViewState {
  return {
    ...state,
    selectedRegions: state.selectedRegions.filter((id) => id !== regionId),
    positiveRegion: state.positiveRegion === regionId ? null : state.positiveRegion,
    negativeRegion: state.negativeRegion === regionId ? null : state.negativeRegion,
  };
}

export function pinGlyph(state: ViewState, association: number, gene: string): ViewState {
  const existing = state.pinnedGlyphs[association] ?? [];
  if (existing.some((g) => g.gene === gene)) {
    return state;
  }
  const slot = existing.length;
  const glyph: GlyphPosition = {
    gene,
    dx: 46 * Math.cos((slot * Math.PI) / 3),
    dy: 46 * Math.sin((slot * Math.PI) / 3),
  };
  return {
    ...state,
    pinnedGlyphs: { ...state.pinnedGlyphs, [association]: [...existing, glyph] },
  };
}

export function moveGlyph(
  state: ViewState,
  association: number,
  gene: string,
  dx: number,
  dy: number,
): ViewState {
  const glyphs = (state.pinnedGlyphs[association] ?? []).map((g) =>
    g.gene === gene ? { ...g, dx, dy } : g,
  );
  return { ...state, pinnedGlyphs: { ...state.pinnedGlyphs, [association]: glyphs } };
}

/** Append a verification card; earlier cards are kept untouched. */
export function appendCard(state: ViewState, card: VerificationRecord): ViewState {
  return { ...state, verificationCards: [...state.verificationCards, card] };
}

// -- persistence of the client-side parts (colors and glyph layout live on
// the server via PATCH; region selection and card cache are local) ----------

export interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
}

const STORAGE_KEY = "cellscout-view-state";

export function saveState(state: ViewState, storage: StorageLike): void {
  storage.setItem(
    STORAGE_KEY,
    JSON.stringify({
      selectedDataset: state.selectedDataset,
      selectedRegions: state.selectedRegions,
      colorMap: state.colorMap,
      pinnedGlyphs: state.pinnedGlyphs,
      positiveRegion: state.positiveRegion,
      negativeRegion: state.negativeRegion,
    }),
  );
}

export function loadState(storage: StorageLike): ViewState {
  const base = initialState();
  const raw = storage.getItem(STORAGE_KEY);
  if (!raw) {
    return base;
  }
  try {
    const saved = JSON.parse(raw) as Partial<ViewState>;
    return {
      ...base,
      selectedDataset: saved.selectedDataset ?? null,
      selectedRegions: saved.selectedRegions ?? [],
      colorMap: saved.colorMap ?? {},
      pinnedGlyphs: saved.pinnedGlyphs ?? {},
      positiveRegion: saved.positiveRegion ?? null,
      negativeRegion: saved.negativeRegion ?? null,
    };
  } catch {
    return base;
  }
}
