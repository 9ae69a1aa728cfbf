"""Objective terms for the mining model and their analytic gradients.

The total loss is ``-(F + lambda * I) + beta * crc`` where

* F rewards experts whose selected genes are distinctively active in the
  cell population softly assigned to them (discriminative power),
* I is the fraction of per-gene binned entropy retained by the gene gates
  (information retention, in [0, 1]),
* crc is a squared-hinge penalty on embedded-neighbor pairs whose gating
  distributions make a shared state unlikely.

Population statistics use the soft gating weights, so F is differentiable
in both the gates and the gating network; the pair set and the neighborhood
scale delta are discrete per-step constants, which is also why the encoder
and embedding parameters carry no gradient through this objective.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data import ExpressionMatrix
from ..errors import TooFewPoints
from .config import CRC_PAIR_BUDGET, PROB_FLOOR, MinerConfig
from .model import ForwardOutput, MoEModel, Params

EPS = PROB_FLOOR


@dataclass(frozen=True)
class LossBreakdown:
    f_score: float
    mir: float
    crc_penalty: float
    total: float

    def to_dict(self) -> dict[str, float]:
        return {
            "f_score": self.f_score,
            "mir": self.mir,
            "crc_penalty": self.crc_penalty,
            "total": self.total,
        }

    @classmethod
    def from_dict(cls, d: dict[str, float]) -> "LossBreakdown":
        return cls(d["f_score"], d["mir"], d["crc_penalty"], d["total"])


@dataclass(frozen=True)
class DataStats:
    """Per-dataset constants consumed by the objective.

    ``activation`` rescales each gene column to [0, 1] over its dataset-wide
    range, giving a unitless "how high is this cell's expression of gene q"
    score. ``gene_entropy`` is the per-gene equal-width binned entropy (nats);
    their sum is the full-space entropy the retention term normalizes by.
    """

    activation: np.ndarray  # (m, n) in [0, 1]
    gene_entropy: np.ndarray  # (n,)
    total_entropy: float

    @classmethod
    def from_matrix(cls, matrix: ExpressionMatrix, bins: int) -> "DataStats":
        values = matrix.values
        lo = values.min(axis=0)
        hi = values.max(axis=0)
        span = hi - lo
        act = np.zeros_like(values)
        ok = span > 0
        act[:, ok] = (values[:, ok] - lo[ok]) / span[ok]

        m, n = values.shape
        entropy = np.zeros(n)
        for q in range(n):
            if not ok[q]:
                continue
            counts, _ = np.histogram(values[:, q], bins=bins, range=(lo[q], hi[q]))
            probs = counts[counts > 0] / m
            entropy[q] = float(-(probs * np.log(probs)).sum())
        return cls(activation=act, gene_entropy=entropy, total_entropy=float(entropy.sum()))


def compute_delta(points: np.ndarray, neighbors: int = 5) -> float:
    """Mean distance from each point to its ``neighbors`` nearest neighbors,
    averaged over all points. Requires at least neighbors + 1 points."""
    points = np.asarray(points, dtype=float)
    npts = points.shape[0]
    if npts < neighbors + 1:
        raise TooFewPoints(f"need at least {neighbors + 1} points, got {npts}")
    d2 = np.sum((points[:, None, :] - points[None, :, :]) ** 2, axis=-1)
    np.fill_diagonal(d2, np.inf)
    nn = np.sqrt(np.partition(d2, neighbors - 1, axis=1)[:, :neighbors])
    return float(nn.mean())


def select_crc_pairs(
    coords: np.ndarray,
    delta: float,
    rng: np.random.Generator | None = None,
    budget: int = CRC_PAIR_BUDGET,
) -> np.ndarray:
    """Pairs (i, j) whose squared embedding distance is within delta.

    All unordered pairs are considered when they fit the budget; otherwise
    ``budget`` candidate pairs are subsampled first.
    """
    b = coords.shape[0]
    n_pairs = b * (b - 1) // 2
    if n_pairs == 0:
        return np.empty((0, 2), dtype=int)
    if n_pairs <= budget:
        ii, jj = np.triu_indices(b, k=1)
    else:
        if rng is None:
            rng = np.random.default_rng(0)
        ii = rng.integers(0, b, size=budget)
        jj = rng.integers(0, b, size=budget)
        keep = ii != jj
        ii, jj = ii[keep], jj[keep]
    d2 = np.sum((coords[ii] - coords[jj]) ** 2, axis=1)
    within = d2 <= delta
    return np.stack([ii[within], jj[within]], axis=1)


def _f_term(
    w: np.ndarray, gates: np.ndarray, activation: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray]:
    """Discriminative power and its gradients w.r.t. gating weights and gates.

    With soft population masses pi_u = mean_i w_iu, conditional activation
    rates P_uq = sum_i w_iu A_iq / sum_i w_iu and the selection-weighted
    reference rate M_q = sum_u pi_u * gate_uq * P_uq,

        F = sum_u pi_u sum_q gate_uq * KL(Bern(P_uq) || Bern(M_q))

    i.e. each expert earns, for every gene its gate selects, the divergence
    between that gene's activation rate in the expert's own population and
    the dataset-wide selected rate. Both Bernoulli sides matter: a gene that
    is distinctively silent in a population discriminates too, and the
    strict convexity in P means diluted populations (mixtures of unlike
    cells) always score below pure ones. Feeding the gates into M makes
    over-selection self-limiting: uninformative genes settle at a partial
    gate instead of saturating.
    """
    batch = w.shape[0]
    s = w.sum(axis=0)  # (k,)
    s_safe = np.maximum(s, 1e-12)
    pi = s_safe / batch
    n_uq = w.T @ activation  # (k, n)
    p_cond = n_uq / s_safe[:, None]  # (k, n) in [0, 1]
    m_q = (gates * n_uq).sum(axis=0) / batch  # (n,)

    pc = np.clip(p_cond, EPS, 1.0 - EPS)
    mc = np.clip(m_q, EPS, 1.0 - EPS)
    chi_p = ((p_cond > EPS) & (p_cond < 1.0 - EPS)).astype(float)
    chi_m = ((m_q > EPS) & (m_q < 1.0 - EPS)).astype(float)

    div = pc * np.log(pc / mc) + (1.0 - pc) * np.log((1.0 - pc) / (1.0 - mc))
    ddiv_dp = np.log(pc / mc) - np.log((1.0 - pc) / (1.0 - mc))
    ddiv_dm = -pc / mc + (1.0 - pc) / (1.0 - mc)

    f_val = float((pi[:, None] * gates * div).sum())

    # Shared per-gene feedback through the reference rate M.
    e_q = (pi[:, None] * gates * ddiv_dm).sum(axis=0)  # (n,)
    grad_gates = pi[:, None] * (div + chi_m[None, :] * e_q[None, :] * p_cond)
    # dF/dw_iu = (1/B) sum_q G_uq [div + chiP ddiv_dp (A_iq - P) + chiM E_q A_iq]
    coef_a = gates * (chi_p * ddiv_dp + chi_m[None, :] * e_q[None, :])  # (k, n)
    coef_const = (gates * (div - chi_p * ddiv_dp * p_cond)).sum(axis=1)  # (k,)
    grad_w = (activation @ coef_a.T + coef_const[None, :]) / batch
    return f_val, grad_w, grad_gates


def _retention_term(
    gates: np.ndarray, stats: DataStats
) -> tuple[float, np.ndarray]:
    """Entropy retention I in [0, 1] and its gradient w.r.t. the gates."""
    if stats.total_entropy <= 0:
        return 0.0, np.zeros_like(gates)
    k = gates.shape[0]
    retained = float((gates * stats.gene_entropy[None, :]).sum()) / k
    mir = retained / stats.total_entropy
    grad = np.tile(stats.gene_entropy / (k * stats.total_entropy), (k, 1))
    return mir, grad


def _crc_term(
    w: np.ndarray, pairs: np.ndarray, gamma: float
) -> tuple[float, np.ndarray]:
    """Squared-hinge penalty on within-delta pairs and its gradient in w."""
    grad_w = np.zeros_like(w)
    if pairs.shape[0] == 0:
        return 0.0, grad_w
    wi = w[pairs[:, 0]]
    wj = w[pairs[:, 1]]
    p_same = (wi * wj).sum(axis=1)
    hinge = np.maximum(0.0, gamma - p_same)
    penalty = float((hinge**2).mean())
    coeff = -2.0 * hinge / pairs.shape[0]  # d penalty / d p_same per pair
    np.add.at(grad_w, pairs[:, 0], coeff[:, None] * wj)
    np.add.at(grad_w, pairs[:, 1], coeff[:, None] * wi)
    return penalty, grad_w


def compute_loss(
    output: ForwardOutput,
    stats: DataStats,
    config: MinerConfig,
    delta: float,
    pairs: np.ndarray | None = None,
    pair_rng: np.random.Generator | None = None,
) -> LossBreakdown:
    """Evaluate the three objective terms for one forward pass.

    ``pairs`` pins the constraint pair set explicitly (gradient checking);
    otherwise pairs are selected from the pass's own embedding.
    """
    breakdown, _, _ = loss_with_grads(output, stats, config, delta, pairs, pair_rng)
    return breakdown


def loss_with_grads(
    output: ForwardOutput,
    stats: DataStats,
    config: MinerConfig,
    delta: float,
    pairs: np.ndarray | None = None,
    pair_rng: np.random.Generator | None = None,
) -> tuple[LossBreakdown, np.ndarray, np.ndarray]:
    """Loss breakdown plus d(total)/d(gating weights) and d(total)/d(gates)."""
    w = output.gating_weights
    gates = output.gene_gates
    act = stats.activation[output.cell_indices]

    if pairs is None:
        pairs = select_crc_pairs(output.embedding_2d, delta, rng=pair_rng)

    f_val, f_gw, f_gg = _f_term(w, gates, act)
    mir, i_gg = _retention_term(gates, stats)
    crc, c_gw = _crc_term(w, pairs, config.gamma)

    lam = config.effective_lambda
    total = -(f_val + lam * mir) + config.beta * crc
    grad_w = -f_gw + config.beta * c_gw
    grad_gates = -(f_gg + lam * i_gg)
    breakdown = LossBreakdown(f_score=f_val, mir=mir, crc_penalty=crc, total=total)
    return breakdown, grad_w, grad_gates


def backprop_params(
    model: MoEModel, output: ForwardOutput, grad_w: np.ndarray, grad_gates: np.ndarray
) -> Params:
    """Map objective gradients onto the parameter store.

    Gating-weight gradients flow through the (Gumbel-)softmax and the two
    gating layers; gate gradients flow through the (relaxed) sigmoid into the
    per-expert gate logits. Encoder, scoring and embedding parameters receive
    zeros: the objective reads the embedding only through the frozen pair
    set, so their true gradient is zero.
    """
    grads: Params = {name: np.zeros_like(arr) for name, arr in model.params.items()}
    p = model.params
    w = output.gating_weights
    x = output.cache["x"]
    h1 = output.cache["h1"]

    # Softmax Jacobian, then the temperature scaling used in train mode.
    dot = (grad_w * w).sum(axis=1, keepdims=True)
    grad_logits = w * (grad_w - dot)
    if output.mode == "train":
        grad_logits = grad_logits / output.temperature

    grads["gating.W2"] = h1.T @ grad_logits
    grads["gating.b2"] = grad_logits.sum(axis=0)
    grad_h1 = grad_logits @ p["gating.W2"].T
    grad_pre = grad_h1 * (1.0 - h1**2)
    grads["gating.W1"] = x.T @ grad_pre
    grads["gating.b1"] = grad_pre.sum(axis=0)

    gates = output.gene_gates
    dgate_dlogit = gates * (1.0 - gates)
    if output.mode == "train":
        dgate_dlogit = dgate_dlogit / output.temperature
    for u in range(model.config.k):
        grads[f"expert{u}.gate"] = grad_gates[u] * dgate_dlogit[u]
    return grads


def clip_gradients(grads: Params, max_norm: float) -> float:
    """Scale the whole gradient in place to a global norm cap. Returns the
    pre-clip norm."""
    total = float(np.sqrt(sum(float((g**2).sum()) for g in grads.values())))
    if total > max_norm and total > 0:
        scale = max_norm / total
        for g in grads.values():
            g *= scale
    return total
