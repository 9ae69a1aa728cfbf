"""Training loop, association extraction, model selection, serialization."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..data import ExpressionMatrix
from ..embedding import Embedding2D
from ..errors import InvalidConfig, NonFiniteLoss, TooFewCells
from .config import GRAD_CLIP_NORM, MinerConfig
from .model import MoEModel, forward
from .objective import (
    DataStats,
    LossBreakdown,
    backprop_params,
    clip_gradients,
    compute_delta,
    compute_loss,
    loss_with_grads,
    select_crc_pairs,
)

MODEL_FORMAT_VERSION = "cellscout-model/1"


@dataclass
class AssociationRelationship:
    """One mined relationship: per-cell relevance and per-gene importance.

    Relevance is the gating distribution, so the k relevance values of any
    cell sum to 1; importance is rescaled so the strongest gene sits at 1.
    """

    index: int
    relevance: np.ndarray  # (m,)
    importance: np.ndarray  # (n,)
    color: str | None = None
    annotation: str | None = None

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "relevance": [float(v) for v in self.relevance],
            "importance": [float(v) for v in self.importance],
            "color": self.color,
            "annotation": self.annotation,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AssociationRelationship":
        return cls(
            index=int(d["index"]),
            relevance=np.asarray(d["relevance"], dtype=float),
            importance=np.asarray(d["importance"], dtype=float),
            color=d.get("color"),
            annotation=d.get("annotation"),
        )


@dataclass
class TrainedModel:
    model: MoEModel
    config: MinerConfig
    associations: list[AssociationRelationship]
    embedding: Embedding2D
    informativeness: float
    history: list[LossBreakdown] = field(default_factory=list)


def extract_associations(model: MoEModel, matrix: ExpressionMatrix) -> list[AssociationRelationship]:
    """Noise-free relevance (gating weights) and importance (gene gates,
    max-rescaled) for every expert, in expert order."""
    out = forward(model, matrix, mode="eval")
    associations = []
    for u in range(model.config.k):
        imp = out.gene_gates[u].copy()
        peak = imp.max()
        if peak > 0:
            imp = imp / peak
        associations.append(
            AssociationRelationship(
                index=u,
                relevance=out.gating_weights[:, u].copy(),
                importance=imp,
            )
        )
    return associations


def informativeness(associations: list[AssociationRelationship], k: int) -> float:
    """Normalized entropy of the dominant-association distribution.

    1.0 when the cells split uniformly across the k experts, 0.0 when a
    single expert dominates every cell.
    """
    if k < 2:
        raise InvalidConfig("informativeness requires k >= 2")
    rel = np.stack([a.relevance for a in associations])  # (k, m)
    labels = np.argmax(rel, axis=0)
    counts = np.bincount(labels, minlength=k)
    probs = counts[counts > 0] / labels.size
    entropy = float(-(probs * np.log2(probs)).sum())
    return entropy / math.log2(k)


def _batches(perm: np.ndarray, batch_size: int) -> list[np.ndarray]:
    return [perm[i : i + batch_size] for i in range(0, perm.size, batch_size)]


def train(
    matrix: ExpressionMatrix,
    config: MinerConfig,
    on_epoch: Callable[[int, LossBreakdown], None] | None = None,
) -> TrainedModel:
    """Fit the mining model; fully deterministic given the config seed.

    Each epoch recomputes the neighborhood scale delta from the current
    noise-free embedding, anneals the sampling temperature geometrically,
    and applies clipped plain gradient-descent updates per minibatch. The
    recorded history is the noise-free full-data loss after each epoch.
    """
    if not matrix.normalized:
        raise InvalidConfig("training expects a normalized matrix")
    if matrix.m < 6:
        raise TooFewCells(f"training needs at least 6 cells, got {matrix.m}")
    if matrix.n < 2:
        raise InvalidConfig("training needs at least 2 genes")

    rng = np.random.default_rng(config.seed)
    model = MoEModel.initialize(matrix.n, config, rng)
    stats = DataStats.from_matrix(matrix, config.bins)
    history: list[LossBreakdown] = []

    ratio = config.temperature_end / config.temperature_start
    denom = max(config.epochs - 1, 1)
    for epoch in range(config.epochs):
        tau = config.temperature_start * ratio ** (epoch / denom)

        eval_out = forward(model, matrix, mode="eval")
        delta = compute_delta(eval_out.embedding_2d)

        for batch in _batches(rng.permutation(matrix.m), config.batch_size):
            out = forward(model, matrix, batch, temperature=tau, mode="train", rng=rng)
            breakdown, grad_w, grad_gates = loss_with_grads(
                out, stats, config, delta, pair_rng=rng
            )
            if not math.isfinite(breakdown.total):
                raise NonFiniteLoss(epoch)
            grads = backprop_params(model, out, grad_w, grad_gates)
            clip_gradients(grads, GRAD_CLIP_NORM)
            for name, grad in grads.items():
                model.params[name] -= config.learning_rate * grad

        eval_out = forward(model, matrix, mode="eval")
        epoch_rng = np.random.default_rng([config.seed, epoch])
        epoch_breakdown = compute_loss(
            eval_out, stats, config, delta, pair_rng=epoch_rng
        )
        if not math.isfinite(epoch_breakdown.total):
            raise NonFiniteLoss(epoch)
        history.append(epoch_breakdown)
        if on_epoch is not None:
            on_epoch(epoch, epoch_breakdown)

    associations = extract_associations(model, matrix)
    final_out = forward(model, matrix, mode="eval")
    embedding = Embedding2D(coords=final_out.embedding_2d, source="model")
    return TrainedModel(
        model=model,
        config=config,
        associations=associations,
        embedding=embedding,
        informativeness=informativeness(associations, config.k),
        history=history,
    )


def gradient_check(
    model: MoEModel,
    matrix: ExpressionMatrix,
    config: MinerConfig,
    param_subset: np.ndarray | int | None = 120,
    h: float = 1e-4,
    seed: int = 0,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    The constraint pair set and neighborhood scale are frozen at the base
    point, matching how a training step treats them, so the noise-free loss
    is smooth in every parameter and the comparison is exact. Parameters the
    objective provably ignores should agree on (near-)zero from both routes.
    """
    stats = DataStats.from_matrix(matrix, config.bins)
    base_out = forward(model, matrix, mode="eval")
    delta = compute_delta(base_out.embedding_2d)
    pairs = select_crc_pairs(
        base_out.embedding_2d, delta, rng=np.random.default_rng(seed)
    )

    _, grad_w, grad_gates = loss_with_grads(base_out, stats, config, delta, pairs=pairs)
    grads = backprop_params(model, base_out, grad_w, grad_gates)
    flat_grad = np.concatenate([grads[name].ravel() for name, _ in model.layout()])

    base_flat = model.flatten()
    scratch = model.copy()

    def loss_at(flat: np.ndarray) -> float:
        scratch.unflatten(flat)
        out = forward(scratch, matrix, mode="eval")
        return compute_loss(out, stats, config, delta, pairs=pairs).total

    if param_subset is None:
        indices = np.arange(base_flat.size)
    elif isinstance(param_subset, (int, np.integer)):
        count = min(int(param_subset), base_flat.size)
        indices = np.random.default_rng(seed).choice(base_flat.size, size=count, replace=False)
    else:
        indices = np.asarray(param_subset, dtype=int)

    max_err = 0.0
    for idx in indices:
        bumped = base_flat.copy()
        bumped[idx] = base_flat[idx] + h
        up = loss_at(bumped)
        bumped[idx] = base_flat[idx] - h
        down = loss_at(bumped)
        fd = (up - down) / (2.0 * h)
        a = flat_grad[idx]
        err = abs(a - fd) / max(abs(a), abs(fd), 1e-8)
        max_err = max(max_err, err)
    return max_err


@dataclass
class KSweepEntry:
    k: int
    informativeness: float | None = None
    error: str | None = None


@dataclass
class KSweepReport:
    entries: list[KSweepEntry]
    chosen_k: int | None

    def to_dict(self) -> dict:
        return {
            "entries": [
                {"k": e.k, "informativeness": e.informativeness, "error": e.error}
                for e in self.entries
            ],
            "chosen_k": self.chosen_k,
        }


def select_k(
    matrix: ExpressionMatrix,
    config_template: MinerConfig,
    k_candidates: list[int],
    plateau_eps: float = 0.01,
    on_epoch: Callable[[int, LossBreakdown], None] | None = None,
) -> KSweepReport:
    """Train once per candidate k (same seed policy) and pick the smallest k
    whose informativeness sits within ``plateau_eps`` of the best seen.

    Individual training failures are recorded and the sweep continues.
    """
    if not k_candidates:
        raise InvalidConfig("k_candidates must be non-empty")
    if sorted(k_candidates) != list(k_candidates):
        raise InvalidConfig("k_candidates must be sorted ascending")
    if any(k < 2 for k in k_candidates):
        raise InvalidConfig("every candidate k must be >= 2")

    entries: list[KSweepEntry] = []
    for k in k_candidates:
        try:
            trained = train(matrix, config_template.replace(k=k), on_epoch=on_epoch)
            entries.append(KSweepEntry(k=k, informativeness=trained.informativeness))
        except NonFiniteLoss as exc:
            entries.append(KSweepEntry(k=k, error=f"{exc.code}: {exc}"))

    scored = [e for e in entries if e.informativeness is not None]
    chosen = None
    if scored:
        best = max(e.informativeness for e in scored)
        for e in scored:
            if e.informativeness >= best - plateau_eps:
                chosen = e.k
                break
    return KSweepReport(entries=entries, chosen_k=chosen)


# -- serialization -------------------------------------------------------------


def model_to_dict(trained: TrainedModel) -> dict:
    model = trained.model
    return {
        "version": MODEL_FORMAT_VERSION,
        "config": trained.config.to_dict(),
        "n_genes": model.n_genes,
        "layout": [
            {"name": name, "shape": list(shape)} for name, shape in model.layout()
        ],
        "params": [float(v) for v in model.flatten()],
        "associations": [a.to_dict() for a in trained.associations],
        "informativeness": trained.informativeness,
        "history": [b.to_dict() for b in trained.history],
    }


def model_to_json(trained: TrainedModel) -> str:
    return json.dumps(model_to_dict(trained), sort_keys=True)


def model_from_dict(data: dict, matrix: ExpressionMatrix) -> TrainedModel:
    if data.get("version") != MODEL_FORMAT_VERSION:
        raise InvalidConfig(f"unsupported model format {data.get('version')!r}")
    config = MinerConfig.from_dict(data["config"])
    model = MoEModel(n_genes=int(data["n_genes"]), config=config)
    model.unflatten(np.asarray(data["params"], dtype=float))
    associations = [AssociationRelationship.from_dict(a) for a in data["associations"]]
    out = forward(model, matrix, mode="eval")
    embedding = Embedding2D(coords=out.embedding_2d, source="model")
    history = [LossBreakdown.from_dict(b) for b in data.get("history", [])]
    return TrainedModel(
        model=model,
        config=config,
        associations=associations,
        embedding=embedding,
        informativeness=float(data["informativeness"]),
        history=history,
    )
