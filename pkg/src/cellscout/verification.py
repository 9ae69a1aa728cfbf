"""Entropy-based biomarker thresholds and statistical validation.

Thresholds are picked per gene by maximizing information gain over the
pooled cells of a positive and a negative region; a biomarker predicts a
cell positive when it satisfies every per-gene predicate (conjunction).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analytics import Region
from .data import ExpressionMatrix
from .errors import (
    DegenerateValues,
    EmptyBiomarker,
    EmptySet,
    LengthMismatch,
    OverlappingRegions,
    SingleClass,
)


@dataclass(frozen=True)
class GenePredicate:
    gene: str
    threshold: float
    direction: str  # "above" | "below"
    information_gain: float

    def matches(self, value: float) -> bool:
        return value > self.threshold if self.direction == "above" else value <= self.threshold

    def to_dict(self) -> dict:
        return {
            "gene": self.gene,
            "threshold": self.threshold,
            "direction": self.direction,
            "information_gain": self.information_gain,
        }


@dataclass(frozen=True)
class Biomarker:
    genes: tuple[str, ...]
    predicates: tuple[GenePredicate, ...]

    def __post_init__(self):
        if not self.genes:
            raise EmptyBiomarker("a biomarker needs at least one gene")
        if len(set(self.genes)) != len(self.genes):
            raise DegenerateValues("duplicate genes in biomarker")

    def to_dict(self) -> dict:
        return {"genes": list(self.genes), "predicates": [p.to_dict() for p in self.predicates]}


@dataclass(frozen=True)
class VerificationResult:
    f1: float
    accuracy: float
    per_gene: tuple[GenePredicate, ...]
    tp: int
    fp: int
    fn: int
    tn: int

    def to_dict(self) -> dict:
        return {
            "f1": self.f1,
            "accuracy": self.accuracy,
            "per_gene": [p.to_dict() for p in self.per_gene],
            "confusion": {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn},
        }


def scores_from_confusion(tp: int, fp: int, fn: int, tn: int) -> tuple[float, float]:
    """(f1, accuracy) from a confusion; f1 is 0 when its denominator is 0."""
    denom = 2 * tp + fp + fn
    f1 = 2.0 * tp / denom if denom > 0 else 0.0
    total = tp + fp + fn + tn
    accuracy = (tp + tn) / total if total > 0 else 0.0
    return float(f1), float(accuracy)


def entropy(labels: np.ndarray | list[int]) -> float:
    """Shannon entropy in bits of a binary label vector; 0*log0 := 0."""
    labels = np.asarray(labels)
    if labels.size == 0:
        raise EmptySet("entropy of an empty set is undefined")
    _, counts = np.unique(labels, return_counts=True)
    probs = counts / labels.size
    return float(-(probs * np.log2(probs)).sum())


def information_gain(
    values: np.ndarray | list[float],
    labels: np.ndarray | list[int],
    threshold: float,
) -> float:
    """Entropy reduction from splitting at the threshold (values <= T vs > T);
    an empty side contributes zero."""
    values = np.asarray(values, dtype=float)
    labels = np.asarray(labels)
    if values.size != labels.size:
        raise LengthMismatch(f"{values.size} values vs {labels.size} labels")
    base = entropy(labels)
    low = labels[values <= threshold]
    high = labels[values > threshold]
    gain = base
    for side in (low, high):
        if side.size:
            gain -= side.size / labels.size * entropy(side)
    return float(gain)


def best_threshold(
    values: np.ndarray | list[float], labels: np.ndarray | list[int]
) -> GenePredicate:
    """Best split over midpoints of consecutive distinct sorted values.

    Ties break toward the lowest threshold. Direction is ``above`` when the
    greater-than side carries the higher positive rate, otherwise ``below``.
    """
    values = np.asarray(values, dtype=float)
    labels = np.asarray(labels)
    if values.size != labels.size:
        raise LengthMismatch(f"{values.size} values vs {labels.size} labels")
    distinct = np.unique(values)
    if distinct.size < 2:
        raise DegenerateValues("all values identical; no candidate thresholds")
    if np.unique(labels).size < 2:
        raise SingleClass("both classes must be present")

    candidates = (distinct[:-1] + distinct[1:]) / 2.0
    best_t, best_ig = None, -1.0
    for t in candidates:
        ig = information_gain(values, labels, t)
        if ig > best_ig + 1e-12:
            best_t, best_ig = float(t), ig
    low_rate = labels[values <= best_t].mean()
    high_mask = values > best_t
    high_rate = labels[high_mask].mean() if high_mask.any() else 0.0
    direction = "above" if high_rate > low_rate else "below"
    return GenePredicate(gene="", threshold=best_t, direction=direction, information_gain=best_ig)


def _check_regions(positive: Region, negative: Region) -> None:
    overlap = set(positive.cell_indices) & set(negative.cell_indices)
    if overlap:
        raise OverlappingRegions(
            f"regions share {len(overlap)} cells (e.g. index {min(overlap)})"
        )


def evaluate_biomarker(
    genes: list[str],
    positive: Region,
    negative: Region,
    matrix: ExpressionMatrix,
) -> tuple[VerificationResult, Biomarker]:
    """Fit one threshold per gene on the pooled region cells and score the
    conjunction of the resulting predicates with F1 and accuracy."""
    if not genes:
        raise EmptyBiomarker("no genes given")
    _check_regions(positive, negative)
    pos_idx = np.asarray(positive.cell_indices)
    neg_idx = np.asarray(negative.cell_indices)
    pooled = np.concatenate([pos_idx, neg_idx])
    labels = np.concatenate([np.ones(pos_idx.size, int), np.zeros(neg_idx.size, int)])

    predicates = []
    for gene in genes:
        col = matrix.gene_index(gene)
        predicate = best_threshold(matrix.values[pooled, col], labels)
        predicates.append(
            GenePredicate(
                gene=gene,
                threshold=predicate.threshold,
                direction=predicate.direction,
                information_gain=predicate.information_gain,
            )
        )

    predicted = np.ones(pooled.size, dtype=bool)
    for predicate in predicates:
        col = matrix.gene_index(predicate.gene)
        gene_values = matrix.values[pooled, col]
        if predicate.direction == "above":
            predicted &= gene_values > predicate.threshold
        else:
            predicted &= gene_values <= predicate.threshold

    actual = labels.astype(bool)
    tp = int(np.sum(predicted & actual))
    fp = int(np.sum(predicted & ~actual))
    fn = int(np.sum(~predicted & actual))
    tn = int(np.sum(~predicted & ~actual))
    f1, accuracy = scores_from_confusion(tp, fp, fn, tn)
    result = VerificationResult(
        f1=f1,
        accuracy=accuracy,
        per_gene=tuple(predicates),
        tp=tp,
        fp=fp,
        fn=fn,
        tn=tn,
    )
    return result, Biomarker(genes=tuple(genes), predicates=tuple(predicates))


def refine_biomarker(
    existing: Biomarker,
    add: list[str],
    remove: list[str],
    positive: Region,
    negative: Region,
    matrix: ExpressionMatrix,
) -> tuple[VerificationResult, Biomarker]:
    """Re-evaluate with genes added/removed; identical to evaluate_biomarker
    on the edited gene set."""
    removed = set(remove)
    genes = [g for g in existing.genes if g not in removed]
    genes += [g for g in add if g not in genes]
    if not genes:
        raise EmptyBiomarker("refinement removed every gene")
    return evaluate_biomarker(genes, positive, negative, matrix)
