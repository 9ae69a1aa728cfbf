"""Mixture-of-experts model: parameters, sampling, forward pass.

The model maps a cell's expression vector to k gating weights (two affine
layers with tanh), routes a per-expert gene-gated copy of the input through
that expert's encoder, and projects the gating-weighted latent mixture to 2D
through a shared head. All parameters live in a flat, deterministically
ordered store so serialization and finite-difference checks are trivial.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from ..data import ExpressionMatrix
from ..errors import IndexOutOfRange, NonFiniteLogits
from .config import EMBED_HIDDEN, ENCODER_HIDDEN, GATING_HIDDEN, MinerConfig

Params = dict[str, np.ndarray]

# Geometry of the frozen embedding readout (see MoEModel.initialize).
ANCHOR_RADIUS = 1.2
LATENT_SCALE = 0.5
HEAD_GAIN = 2.0


def gumbel_softmax(
    logits: np.ndarray,
    temperature: float,
    rng: np.random.Generator | None = None,
    noise: np.ndarray | None = None,
) -> np.ndarray:
    """softmax((logits + Gumbel(0,1) noise) / temperature) over the last axis.

    ``noise`` overrides sampling (used by tests to pin the noise to zero);
    otherwise ``rng`` must be given.
    """
    logits = np.asarray(logits, dtype=float)
    if not np.all(np.isfinite(logits)):
        raise NonFiniteLogits("logits contain non-finite entries")
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    if noise is None:
        if rng is None:
            raise ValueError("either rng or noise must be provided")
        u = rng.uniform(1e-12, 1.0 - 1e-12, size=logits.shape)
        noise = -np.log(-np.log(u))
    y = (logits + noise) / temperature
    y = y - y.max(axis=-1, keepdims=True)
    e = np.exp(y)
    return e / e.sum(axis=-1, keepdims=True)


def softmax(logits: np.ndarray) -> np.ndarray:
    y = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(y)
    return e / e.sum(axis=-1, keepdims=True)


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=float)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def param_layout(n_genes: int, cfg: MinerConfig) -> list[tuple[str, tuple[int, ...]]]:
    """Deterministic (name, shape) ordering of every trainable array."""
    layout: list[tuple[str, tuple[int, ...]]] = [
        ("gating.W1", (n_genes, GATING_HIDDEN)),
        ("gating.b1", (GATING_HIDDEN,)),
        ("gating.W2", (GATING_HIDDEN, cfg.k)),
        ("gating.b2", (cfg.k,)),
    ]
    for u in range(cfg.k):
        layout += [
            (f"expert{u}.gate", (n_genes,)),
            (f"expert{u}.E1", (n_genes, ENCODER_HIDDEN)),
            (f"expert{u}.c1", (ENCODER_HIDDEN,)),
            (f"expert{u}.E2", (ENCODER_HIDDEN, cfg.latent_dim)),
            (f"expert{u}.c2", (cfg.latent_dim,)),
            (f"expert{u}.S", (cfg.latent_dim,)),
            (f"expert{u}.d", ()),
        ]
    layout += [
        ("embed.H1", (cfg.latent_dim, EMBED_HIDDEN)),
        ("embed.e1", (EMBED_HIDDEN,)),
        ("embed.H2", (EMBED_HIDDEN, 2)),
        ("embed.e2", (2,)),
    ]
    return layout


@dataclass
class MoEModel:
    """Parameter store plus the dimensions needed to interpret it."""

    n_genes: int
    config: MinerConfig
    params: Params = field(default_factory=dict)

    @classmethod
    def initialize(cls, n_genes: int, cfg: MinerConfig, rng: np.random.Generator) -> "MoEModel":
        """Seeded parameter initialization.

        Gene gates start near a soft budget of genes_per_expert open genes
        with tiny symmetry-breaking noise. The objective trains the gating
        network and the gates but leaves the encoders and the embedding head
        at their initialization (the constraint term reads the embedding
        only through a discrete pair set), so those are initialized with
        structure instead of pure noise: each expert's encoder bias anchors
        its latents on a regular polygon, and the head starts as a scaled
        near-identity readout of the anchor plane. A cell's position is then
        its gating-weighted anchor mixture plus a local gated-expression
        term: mixed cells sit near the center, specialized cells at their
        expert's anchor.
        """
        params: Params = {}
        open_frac = min(cfg.genes_per_expert / n_genes, 0.95)
        gate_init = float(np.log(open_frac / (1.0 - open_frac)))
        angles = 2.0 * np.pi * np.arange(cfg.k) / cfg.k
        for name, shape in param_layout(n_genes, cfg):
            if name.endswith(".gate"):
                params[name] = gate_init + 0.01 * rng.standard_normal(shape)
            elif name.endswith(".c2"):
                u = int(name.split(".")[0].removeprefix("expert"))
                anchor = np.zeros(shape)
                anchor[0] = ANCHOR_RADIUS * np.cos(angles[u])
                anchor[1] = ANCHOR_RADIUS * np.sin(angles[u])
                params[name] = anchor
            elif name.endswith((".b1", ".b2", ".c1", ".e1", ".e2", ".d")):
                params[name] = np.zeros(shape)
            elif name.endswith(".E2"):
                params[name] = LATENT_SCALE * rng.standard_normal(shape) / np.sqrt(shape[0])
            elif name == "embed.H1":
                h1 = 0.1 * rng.standard_normal(shape) / np.sqrt(shape[0])
                h1[0, 0] += 1.0
                h1[1, 1] += 1.0
                params[name] = h1
            elif name == "embed.H2":
                h2 = 0.1 * rng.standard_normal(shape) / np.sqrt(shape[0])
                h2[0, 0] += HEAD_GAIN
                h2[1, 1] += HEAD_GAIN
                params[name] = h2
            else:
                fan_in = shape[0] if len(shape) > 0 else 1
                params[name] = rng.standard_normal(shape) / np.sqrt(fan_in)
        return cls(n_genes=n_genes, config=cfg, params=params)

    # -- flat views -----------------------------------------------------------

    def layout(self) -> list[tuple[str, tuple[int, ...]]]:
        return param_layout(self.n_genes, self.config)

    def flatten(self) -> np.ndarray:
        return np.concatenate([self.params[name].ravel() for name, _ in self.layout()])

    def unflatten(self, flat: np.ndarray) -> None:
        offset = 0
        for name, shape in self.layout():
            size = int(np.prod(shape)) if shape else 1
            self.params[name] = flat[offset : offset + size].reshape(shape).copy()
            offset += size
        if offset != flat.size:
            raise ValueError(f"flat vector has {flat.size} entries, layout expects {offset}")

    def copy(self) -> "MoEModel":
        return MoEModel(
            n_genes=self.n_genes,
            config=self.config,
            params={k: v.copy() for k, v in self.params.items()},
        )

    def iter_param_names(self) -> Iterator[str]:
        for name, _ in self.layout():
            yield name


@dataclass
class ForwardOutput:
    """Everything one pass produces, plus the intermediates backprop needs."""

    gating_weights: np.ndarray  # (B, k), rows sum to 1
    gene_gates: np.ndarray  # (k, n) in [0, 1]
    latents: np.ndarray  # (k, B, latent_dim)
    embedding_2d: np.ndarray  # (B, 2)
    expert_scores: np.ndarray  # (B, k)
    cell_indices: np.ndarray  # (B,)
    mode: str  # "train" or "eval"
    temperature: float
    cache: dict = field(default_factory=dict, repr=False)


def forward(
    model: MoEModel,
    matrix: ExpressionMatrix,
    cell_indices: np.ndarray | None = None,
    temperature: float = 1.0,
    mode: str = "eval",
    rng: np.random.Generator | None = None,
) -> ForwardOutput:
    """Run the model over a batch of cells.

    Train mode draws Gumbel noise for the k-way gating and logistic noise
    for the per-gene binary gates; eval mode uses the noise-free softmax and
    sigmoid probabilities, so repeated eval calls are bitwise identical.
    """
    if mode not in ("train", "eval"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "train" and rng is None:
        raise ValueError("train mode requires an rng")
    x_all = matrix.values
    m = x_all.shape[0]
    if cell_indices is None:
        cell_indices = np.arange(m)
    cell_indices = np.asarray(cell_indices, dtype=int)
    if cell_indices.size and (cell_indices.min() < 0 or cell_indices.max() >= m):
        raise IndexOutOfRange(f"cell indices must lie in [0, {m})")
    x = x_all[cell_indices]

    p = model.params
    cfg = model.config
    k = cfg.k

    # Gating network.
    h1_pre = x @ p["gating.W1"] + p["gating.b1"]
    h1 = np.tanh(h1_pre)
    logits = h1 @ p["gating.W2"] + p["gating.b2"]
    if mode == "train":
        gumbel = -np.log(-np.log(rng.uniform(1e-12, 1.0 - 1e-12, size=logits.shape)))
        w = softmax((logits + gumbel) / temperature)
    else:
        w = softmax(logits)

    # Per-expert gene gates: a property of the expert, sampled once per pass.
    gate_logits = np.stack([p[f"expert{u}.gate"] for u in range(k)])  # (k, n)
    if mode == "train":
        u_noise = rng.uniform(1e-12, 1.0 - 1e-12, size=gate_logits.shape)
        logistic = np.log(u_noise) - np.log1p(-u_noise)
        gates = sigmoid((gate_logits + logistic) / temperature)
    else:
        gates = sigmoid(gate_logits)

    # Expert encoders on gated input, then the weighted latent mixture.
    latents = np.empty((k, x.shape[0], cfg.latent_dim))
    scores = np.empty((x.shape[0], k))
    a1_list = []
    for u in range(k):
        gated = gates[u] * x
        a1 = np.tanh(gated @ p[f"expert{u}.E1"] + p[f"expert{u}.c1"])
        latents[u] = a1 @ p[f"expert{u}.E2"] + p[f"expert{u}.c2"]
        scores[:, u] = latents[u] @ p[f"expert{u}.S"] + p[f"expert{u}.d"]
        a1_list.append(a1)
    z = np.einsum("bk,kbl->bl", w, latents)

    he = np.tanh(z @ p["embed.H1"] + p["embed.e1"])
    coords = he @ p["embed.H2"] + p["embed.e2"]

    return ForwardOutput(
        gating_weights=w,
        gene_gates=gates,
        latents=latents,
        embedding_2d=coords,
        expert_scores=scores,
        cell_indices=cell_indices,
        mode=mode,
        temperature=temperature,
        cache={"x": x, "h1": h1, "logits": logits, "a1": a1_list},
    )
