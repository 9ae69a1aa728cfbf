"""2D cell representations: model embedding, PCA baseline, polar layout."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .data import ExpressionMatrix
from .errors import DimensionMismatch, TooFewCells

if TYPE_CHECKING:
    from .miner.training import TrainedModel


def to_polar(coords: np.ndarray) -> np.ndarray:
    """Map (x, y) rows to (r, theta) with theta in [0, 2*pi).

    The origin maps to (0, 0) so serialization stays stable where atan2 is
    undefined.
    """
    coords = np.asarray(coords, dtype=float)
    r = np.sqrt((coords**2).sum(axis=1))
    theta = np.mod(np.arctan2(coords[:, 1], coords[:, 0]), 2.0 * np.pi)
    theta[r == 0] = 0.0
    return np.stack([r, theta], axis=1)


@dataclass(frozen=True)
class Embedding2D:
    coords: np.ndarray  # (m, 2)
    source: str  # "model" or "pca"

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=float)
        if coords.ndim != 2 or coords.shape[1] != 2:
            raise DimensionMismatch(f"expected (m, 2) coordinates, got {coords.shape}")
        if not np.all(np.isfinite(coords)):
            raise DimensionMismatch("coordinates must be finite")
        object.__setattr__(self, "coords", coords)

    @property
    def m(self) -> int:
        return self.coords.shape[0]

    @property
    def polar(self) -> np.ndarray:
        return to_polar(self.coords)

    def to_records(self, cell_ids: list[str]) -> list[dict]:
        if len(cell_ids) != self.m:
            raise DimensionMismatch(f"{len(cell_ids)} ids for {self.m} points")
        polar = self.polar
        return [
            {
                "cell_id": cid,
                "x": float(x),
                "y": float(y),
                "r": float(r),
                "theta": float(t),
            }
            for cid, (x, y), (r, t) in zip(cell_ids, self.coords, polar)
        ]


def embed_with_model(trained: "TrainedModel", matrix: ExpressionMatrix) -> Embedding2D:
    """Noise-free embedding of every cell through the trained model."""
    from .miner.model import forward

    if matrix.n != trained.model.n_genes:
        raise DimensionMismatch(
            f"model expects {trained.model.n_genes} genes, matrix has {matrix.n}"
        )
    out = forward(trained.model, matrix, mode="eval")
    return Embedding2D(coords=out.embedding_2d, source="model")


def embed_with_pca(matrix: ExpressionMatrix, dims: int = 2) -> Embedding2D:
    """Project cells onto the top principal components of the gene covariance.

    Component signs follow a fixed convention: the largest-magnitude loading
    of each component is made positive, so results do not depend on the
    eigensolver's sign choices.
    """
    if matrix.m < 3:
        raise TooFewCells(f"PCA baseline needs at least 3 cells, got {matrix.m}")
    x = matrix.values
    centered = x - x.mean(axis=0)
    cov = centered.T @ centered / (matrix.m - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1][:dims]
    components = eigvecs[:, order]
    for c in range(components.shape[1]):
        pivot = np.argmax(np.abs(components[:, c]))
        if components[pivot, c] < 0:
            components[:, c] = -components[:, c]
    coords = centered @ components
    if coords.shape[1] < 2:
        coords = np.pad(coords, ((0, 0), (0, 2 - coords.shape[1])))
    return Embedding2D(coords=coords, source="pca")
