/** Verification view: pick genes (seeded from association top genes), pick
 * a positive and a negative region, and stack one result card per run.
 * Cards show F1/accuracy and the per-gene range kept by the threshold as a
 * highlighted band; the numeric cutoffs themselves stay hidden. */

import { el, escapeHtml, round } from "../render/svg.js";
import type { ViewState } from "../state.js";
import type { AssociationSummary, RegionRecord, VerificationRecord } from "../types.js";

function rangeBand(direction: "above" | "below"): string {
  // the kept range is drawn as a band on a unit axis: "above" keeps the
  // high end, "below" keeps the low end; no numbers are shown
  const x = direction === "above" ? 55 : 5;
  return el(
    "svg",
    { viewBox: "0 0 100 12", class: "range-band" },
    el("rect", { x: 0, y: 5, width: 100, height: 2, class: "range-axis" }) +
      el("rect", { x, y: 2, width: 40, height: 8, class: "range-kept", "data-side": direction }),
  );
}

export function renderCard(card: VerificationRecord): string {
  const genes = card.result.per_gene
    .map((predicate) =>
      el(
        "div",
        { class: "gene-range" },
        el("span", { class: "gene-name" }, escapeHtml(predicate.gene)) +
          rangeBand(predicate.direction),
      ),
    )
    .join("");
  return el(
    "article",
    { class: "verification-card", "data-order": card.order },
    el("header", {}, escapeHtml(card.genes.join(" + "))) +
      el(
        "p",
        { class: "scores" },
        `F1 ${el("b", {}, String(round(card.result.f1, 2)))}` +
          ` accuracy ${el("b", {}, String(round(card.result.accuracy, 2)))}`,
      ) +
      genes +
      el(
        "footer",
        {},
        el("button", { class: "refine-from", "data-order": card.order }, "refine"),
      ),
  );
}

export interface VerificationData {
  regions: RegionRecord[];
  associations: AssociationSummary[];
  /** genes currently ticked in the picker */
  pickedGenes: string[];
}

export function renderVerificationView(data: VerificationData, state: ViewState): string {
  const seeded = new Set<string>();
  for (const assoc of data.associations) {
    for (const g of assoc.top_genes) {
      seeded.add(g.gene);
    }
  }
  const picker = el(
    "div",
    { class: "gene-picker" },
    [...seeded]
      .sort()
      .map((gene) =>
        el(
          "label",
          {},
          el("input", {
            type: "checkbox",
            value: gene,
            ...(data.pickedGenes.includes(gene) ? { checked: "checked" } : {}),
          }) + escapeHtml(gene),
        ),
      )
      .join(""),
  );
  const regionOptions = (selected: string | null) =>
    data.regions
      .map((region) =>
        el(
          "option",
          { value: region.id, ...(region.id === selected ? { selected: "selected" } : {}) },
          escapeHtml(region.name),
        ),
      )
      .join("");
  const controls = el(
    "div",
    { class: "verify-controls" },
    el("select", { class: "positive-region" }, regionOptions(state.positiveRegion)) +
      el("select", { class: "negative-region" }, regionOptions(state.negativeRegion)) +
      el("button", { class: "run-verify" }, "verify"),
  );
  const cards = [...state.verificationCards]
    .sort((a, b) => b.order - a.order)
    .map(renderCard)
    .join("");
  return el(
    "div",
    { class: "verification-view" },
    picker + controls + el("div", { class: "cards" }, cards),
  );
}
