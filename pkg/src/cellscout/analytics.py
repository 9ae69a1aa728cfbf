"""Derived analytics behind the views: dominant labels, pure-region
detection, relevance profiles with quartile ring normalization, radial
expression histograms, and top-gene rankings."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import ExpressionMatrix
from .errors import EmptyRegion, InvalidConfig
from .miner.training import AssociationRelationship


@dataclass
class Region:
    """A named, persisted set of cell indices."""

    id: str
    name: str
    cell_indices: list[int]
    origin: str = "manual"  # "lasso" | "pure_region" | "manual"

    def __post_init__(self):
        if not self.cell_indices:
            raise EmptyRegion(f"region {self.id!r} has no cells")
        if len(set(self.cell_indices)) != len(self.cell_indices):
            raise InvalidConfig(f"region {self.id!r} has duplicate cell indices")
        if min(self.cell_indices) < 0:
            raise InvalidConfig(f"region {self.id!r} has negative cell indices")
        if self.origin not in ("lasso", "pure_region", "manual"):
            raise InvalidConfig(f"unknown region origin {self.origin!r}")

    def to_dict(self, cell_ids: list[str]) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "origin": self.origin,
            "cell_ids": [cell_ids[i] for i in self.cell_indices],
        }

    @classmethod
    def from_dict(cls, d: dict, cell_ids: list[str]) -> "Region":
        index_of = {cid: i for i, cid in enumerate(cell_ids)}
        return cls(
            id=d["id"],
            name=d["name"],
            origin=d.get("origin", "manual"),
            cell_indices=[index_of[cid] for cid in d["cell_ids"]],
        )


@dataclass
class PureRegion:
    """A compact area whose cells all share the same dominant association."""

    association_index: int
    cell_indices: list[int]
    centroid: tuple[float, float]

    def to_dict(self) -> dict:
        return {
            "association_index": self.association_index,
            "cell_indices": self.cell_indices,
            "centroid": list(self.centroid),
        }


@dataclass
class RelevanceProfile:
    mean_relevance: list[float]  # per association
    rings: list[float]  # mean_relevance / q3
    q3: float

    def to_dict(self) -> dict:
        return {"mean_relevance": self.mean_relevance, "rings": self.rings, "q3": self.q3}


@dataclass
class RadialHistogram:
    gene: str
    bin_edges: list[float]
    densities: list[float]  # max-normalized counts in [0, 1]

    def to_dict(self) -> dict:
        return {"gene": self.gene, "bin_edges": self.bin_edges, "densities": self.densities}


def dominant_labels(associations: list[AssociationRelationship]) -> np.ndarray:
    """Index of each cell's most relevant association; ties go to the lowest
    association index."""
    rel = np.stack([a.relevance for a in associations])  # (k, m)
    return np.argmax(rel, axis=0)


def dbscan(points: np.ndarray, eps: float, min_pts: int) -> np.ndarray:
    """Euclidean DBSCAN labels: -1 for noise, clusters numbered from 0 in
    order of their first core point. Neighborhoods include the point itself."""
    points = np.asarray(points, dtype=float)
    if eps <= 0:
        raise InvalidConfig("eps must be positive")
    if min_pts < 2:
        raise InvalidConfig("min_pts must be >= 2")
    n = points.shape[0]
    labels = np.full(n, -2)  # -2 unvisited, -1 noise
    d2 = np.sum((points[:, None, :] - points[None, :, :]) ** 2, axis=-1)
    neighbor_lists = [np.flatnonzero(d2[i] <= eps * eps) for i in range(n)]
    cluster = -1
    for start in range(n):
        if labels[start] != -2:
            continue
        neighbors = neighbor_lists[start]
        if neighbors.size < min_pts:
            labels[start] = -1
            continue
        cluster += 1
        labels[start] = cluster
        frontier = list(neighbors)
        pos = 0
        while pos < len(frontier):
            j = frontier[pos]
            pos += 1
            if labels[j] == -1:
                labels[j] = cluster
            if labels[j] != -2:
                continue
            labels[j] = cluster
            j_neighbors = neighbor_lists[j]
            if j_neighbors.size >= min_pts:
                frontier.extend(j_neighbors)
    labels[labels == -2] = -1
    return labels


def detect_pure_regions(
    coords: np.ndarray,
    labels: np.ndarray,
    eps: float,
    min_pts: int,
) -> list[PureRegion]:
    """Run DBSCAN per dominant-association class on its own 2D coordinates;
    every non-noise cluster becomes a PureRegion."""
    coords = np.asarray(coords, dtype=float)
    labels = np.asarray(labels)
    regions: list[PureRegion] = []
    for assoc in np.unique(labels):
        members = np.flatnonzero(labels == assoc)
        cluster_labels = dbscan(coords[members], eps, min_pts)
        for cluster in range(cluster_labels.max() + 1):
            cells = members[cluster_labels == cluster]
            centroid = coords[cells].mean(axis=0)
            regions.append(
                PureRegion(
                    association_index=int(assoc),
                    cell_indices=[int(c) for c in cells],
                    centroid=(float(centroid[0]), float(centroid[1])),
                )
            )
    return regions


def relevance_profile(
    region: Region, associations: list[AssociationRelationship]
) -> RelevanceProfile:
    """Mean relevance of the region against each association, normalized by
    the dataset-level upper quartile of all relevance values so ring counts
    compare across regions. rings > 1 means an overflow ring."""
    if not region.cell_indices:
        raise EmptyRegion(f"region {region.id!r} has no cells")
    rel = np.stack([a.relevance for a in associations])  # (k, m)
    idx = np.asarray(region.cell_indices)
    means = rel[:, idx].mean(axis=1)
    q3 = float(np.percentile(rel.ravel(), 75))
    rings = means / q3 if q3 > 0 else np.zeros_like(means)
    return RelevanceProfile(
        mean_relevance=[float(v) for v in means],
        rings=[float(v) for v in rings],
        q3=q3,
    )


def gene_distribution(
    region: Region, gene: str, matrix: ExpressionMatrix, bins: int = 12
) -> RadialHistogram:
    """Max-normalized histogram of the region's expression of one gene, binned
    over that gene's dataset-wide range so two regions share bin edges."""
    if not region.cell_indices:
        raise EmptyRegion(f"region {region.id!r} has no cells")
    col = matrix.gene_index(gene)
    values = matrix.values[:, col]
    lo, hi = float(values.min()), float(values.max())
    if hi <= lo:
        lo, hi = lo - 0.5, lo + 0.5
    counts, edges = np.histogram(
        values[np.asarray(region.cell_indices)], bins=bins, range=(lo, hi)
    )
    peak = counts.max()
    densities = counts / peak if peak > 0 else counts.astype(float)
    return RadialHistogram(
        gene=gene,
        bin_edges=[float(e) for e in edges],
        densities=[float(d) for d in densities],
    )


def top_genes(
    association: AssociationRelationship,
    gene_names: list[str],
    n_top: int = 4,
) -> list[tuple[str, float]]:
    """Genes ranked by importance descending, ties by name; clamped to the
    gene count."""
    if n_top < 1:
        raise InvalidConfig("n_top must be >= 1")
    order = sorted(
        range(len(gene_names)),
        key=lambda q: (-association.importance[q], gene_names[q]),
    )
    return [(gene_names[q], float(association.importance[q])) for q in order[:n_top]]
