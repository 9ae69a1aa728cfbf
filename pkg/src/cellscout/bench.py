"""Synthetic data with planted states and embedding-quality metrics.

The generator plants disjoint marker gene blocks per state so recovery can
be judged against known ground truth; the metrics mirror a standard
embedding comparison: held-out linear classification, KNN label-propagation
clustering accuracy, and three internal validity indices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import ExpressionMatrix
from .embedding import Embedding2D, embed_with_model, embed_with_pca
from .errors import (
    DegenerateClusters,
    InvalidSpec,
    MissingClassInTrain,
    TooFewPoints,
)
from .miner.training import TrainedModel


@dataclass(frozen=True)
class SyntheticSpec:
    n_states: int = 3
    cells_per_state: int = 200
    n_genes: int = 60
    markers_per_state: int = 8
    marker_lift: float = 3.0
    noise_sd: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_states < 2:
            raise InvalidSpec("need at least 2 states")
        if min(self.cells_per_state, self.n_genes, self.markers_per_state) < 1:
            raise InvalidSpec("counts must be positive")
        if self.n_states * self.markers_per_state > self.n_genes:
            raise InvalidSpec("marker blocks exceed the gene count")
        if self.noise_sd < 0 or self.marker_lift < 0:
            raise InvalidSpec("lift and noise must be nonnegative")


def generate_synthetic(spec: SyntheticSpec) -> tuple[ExpressionMatrix, np.ndarray, list[list[str]]]:
    """Raw matrix, true state labels, and the planted marker names per state.

    A state's marker genes draw from Normal(marker_lift, noise_sd) clipped
    at zero; all other entries are |Normal(0, noise_sd)|.
    """
    rng = np.random.default_rng(spec.seed)
    m = spec.n_states * spec.cells_per_state
    values = np.abs(rng.normal(0.0, spec.noise_sd, size=(m, spec.n_genes)))
    labels = np.repeat(np.arange(spec.n_states), spec.cells_per_state)

    gene_names = [f"g{q:03d}" for q in range(spec.n_genes)]
    markers: list[list[str]] = []
    for state in range(spec.n_states):
        cols = np.arange(
            state * spec.markers_per_state, (state + 1) * spec.markers_per_state
        )
        rows = labels == state
        lifted = rng.normal(spec.marker_lift, spec.noise_sd, size=(rows.sum(), cols.size))
        values[np.ix_(rows, cols)] = np.clip(lifted, 0.0, None)
        markers.append([gene_names[c] for c in cols])

    matrix = ExpressionMatrix(
        values=values,
        cell_ids=[f"c{i:04d}" for i in range(m)],
        gene_names=gene_names,
        normalized=False,
    )
    return matrix, labels, markers


# -- embedding quality ---------------------------------------------------------


def knn_clustering_accuracy(
    embedding: Embedding2D | np.ndarray, labels: np.ndarray, k: int = 5
) -> float:
    """Label-propagation accuracy: predict each cell by the majority vote of
    its k nearest neighbors (self excluded), ties to the smallest label."""
    points = embedding.coords if isinstance(embedding, Embedding2D) else np.asarray(embedding)
    labels = np.asarray(labels)
    m = points.shape[0]
    if m <= k:
        raise TooFewPoints(f"need more than k={k} points, got {m}")
    if np.unique(labels).size < 2:
        raise InvalidSpec("need at least 2 classes")
    d2 = np.sum((points[:, None, :] - points[None, :, :]) ** 2, axis=-1)
    np.fill_diagonal(d2, np.inf)
    correct = 0
    for i in range(m):
        nearest = np.argsort(d2[i], kind="stable")[:k]
        votes = np.bincount(labels[nearest])
        if votes.max() > 0 and labels[i] == np.argmax(votes):
            correct += 1
    return correct / m


def linear_classification_accuracy(
    embedding: Embedding2D | np.ndarray,
    labels: np.ndarray,
    split_seed: int = 0,
    train_frac: float = 0.8,
    epochs: int = 200,
    reg: float = 1e-3,
) -> float:
    """Held-out accuracy of a one-vs-rest max-margin linear classifier
    trained by subgradient descent on the hinge loss."""
    points = embedding.coords if isinstance(embedding, Embedding2D) else np.asarray(embedding)
    labels = np.asarray(labels)
    m = points.shape[0]
    rng = np.random.default_rng(split_seed)
    perm = rng.permutation(m)
    n_train = int(round(train_frac * m))
    train_idx, test_idx = perm[:n_train], perm[n_train:]
    classes = np.unique(labels)
    if np.unique(labels[train_idx]).size < classes.size:
        raise MissingClassInTrain("a class is absent from the training split")

    mu = points[train_idx].mean(axis=0)
    sd = points[train_idx].std(axis=0)
    sd[sd == 0] = 1.0
    xtr = (points[train_idx] - mu) / sd
    xte = (points[test_idx] - mu) / sd

    scores = np.zeros((test_idx.size, classes.size))
    for ci, cls in enumerate(classes):
        y = np.where(labels[train_idx] == cls, 1.0, -1.0)
        w = np.zeros(xtr.shape[1])
        b = 0.0
        t = 0
        for _ in range(epochs):
            for i in rng.permutation(train_idx.size):
                t += 1
                lr = 1.0 / (reg * t + 1.0)  # offset keeps the first steps bounded
                margin = y[i] * (xtr[i] @ w + b)
                w *= 1.0 - lr * reg
                if margin < 1.0:
                    w += lr * y[i] * xtr[i]
                    b += lr * y[i]
        scores[:, ci] = xte @ w + b
    predictions = classes[np.argmax(scores, axis=1)]
    return float(np.mean(predictions == labels[test_idx]))


def _split_by_label(points: np.ndarray, labels: np.ndarray) -> list[np.ndarray]:
    classes = np.unique(labels)
    if classes.size < 2:
        raise DegenerateClusters("need at least 2 clusters")
    return [points[labels == c] for c in classes]


def chi(points: np.ndarray, labels: np.ndarray) -> float:
    """Calinski-Harabasz: (BSS / (k-1)) / (WSS / (n-k))."""
    points = np.asarray(points, dtype=float)
    clusters = _split_by_label(points, np.asarray(labels))
    n, k = points.shape[0], len(clusters)
    overall = points.mean(axis=0)
    bss = sum(len(c) * float(((c.mean(axis=0) - overall) ** 2).sum()) for c in clusters)
    wss = sum(float(((c - c.mean(axis=0)) ** 2).sum()) for c in clusters)
    if wss == 0:
        raise DegenerateClusters("zero within-cluster dispersion")
    return (bss / (k - 1)) / (wss / (n - k))


def dbi(points: np.ndarray, labels: np.ndarray) -> float:
    """Davies-Bouldin: mean over clusters of the worst (S_i + S_j) / d_ij,
    with S the mean distance to the centroid."""
    points = np.asarray(points, dtype=float)
    clusters = _split_by_label(points, np.asarray(labels))
    centroids = [c.mean(axis=0) for c in clusters]
    spreads = [float(np.linalg.norm(c - mu, axis=1).mean()) for c, mu in zip(clusters, centroids)]
    k = len(clusters)
    worst = []
    for i in range(k):
        ratios = []
        for j in range(k):
            if i == j:
                continue
            dist = float(np.linalg.norm(centroids[i] - centroids[j]))
            if dist == 0:
                raise DegenerateClusters("coincident cluster centroids")
            ratios.append((spreads[i] + spreads[j]) / dist)
        worst.append(max(ratios))
    return float(np.mean(worst))


def dunn(points: np.ndarray, labels: np.ndarray) -> float:
    """Dunn: min inter-cluster point distance / max intra-cluster diameter."""
    points = np.asarray(points, dtype=float)
    labels = np.asarray(labels)
    clusters = _split_by_label(points, labels)
    max_diameter = 0.0
    for c in clusters:
        if len(c) > 1:
            d = np.linalg.norm(c[:, None, :] - c[None, :, :], axis=-1)
            max_diameter = max(max_diameter, float(d.max()))
    if max_diameter == 0:
        raise DegenerateClusters("all clusters are singletons or coincident")
    min_inter = np.inf
    for i in range(len(clusters)):
        for j in range(i + 1, len(clusters)):
            d = np.linalg.norm(clusters[i][:, None, :] - clusters[j][None, :, :], axis=-1)
            min_inter = min(min_inter, float(d.min()))
    return min_inter / max_diameter


@dataclass
class MetricReport:
    classification_acc: float
    clustering_acc: float
    chi: float
    dbi: float
    dunn: float

    def to_dict(self) -> dict:
        return {
            "classification_acc": self.classification_acc,
            "clustering_acc": self.clustering_acc,
            "chi": self.chi,
            "dbi": self.dbi,
            "dunn": self.dunn,
        }


@dataclass
class BenchmarkReport:
    model: MetricReport
    pca: MetricReport

    def to_dict(self) -> dict:
        return {"model": self.model.to_dict(), "pca": self.pca.to_dict()}

    def to_csv(self) -> str:
        header = "method,classification_acc,clustering_acc,chi,dbi,dunn"
        rows = [header]
        for name, report in (("model", self.model), ("pca", self.pca)):
            d = report.to_dict()
            rows.append(
                f"{name},{d['classification_acc']:.4f},{d['clustering_acc']:.4f},"
                f"{d['chi']:.4f},{d['dbi']:.4f},{d['dunn']:.4f}"
            )
        return "\n".join(rows) + "\n"


def score_embedding(
    embedding: Embedding2D, labels: np.ndarray, split_seed: int = 0, knn_k: int = 5
) -> MetricReport:
    points = embedding.coords
    return MetricReport(
        classification_acc=linear_classification_accuracy(points, labels, split_seed),
        clustering_acc=knn_clustering_accuracy(points, labels, knn_k),
        chi=chi(points, labels),
        dbi=dbi(points, labels),
        dunn=dunn(points, labels),
    )


def run_benchmark(
    matrix: ExpressionMatrix,
    labels: np.ndarray,
    trained: TrainedModel,
    split_seed: int = 0,
    knn_k: int = 5,
) -> BenchmarkReport:
    """Score the model embedding against the PCA baseline on the same data."""
    model_embedding = embed_with_model(trained, matrix)
    pca_embedding = embed_with_pca(matrix)
    return BenchmarkReport(
        model=score_embedding(model_embedding, labels, split_seed, knn_k),
        pca=score_embedding(pca_embedding, labels, split_seed, knn_k),
    )
