"""Training configuration for the expert mining model."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Any

from ..errors import InvalidConfig

# Architecture constants. The gating network and the shared embedding head
# use fixed hidden widths; per-expert encoder width scales with nothing else
# in the config, so it is pinned here too.
GATING_HIDDEN = 64
ENCODER_HIDDEN = 32
EMBED_HIDDEN = 32
CRC_PAIR_BUDGET = 4096
GRAD_CLIP_NORM = 10.0
PROB_FLOOR = 1e-6


@dataclass(frozen=True)
class MinerConfig:
    """Hyperparameters for one mining run.

    ``lam`` is the weight on the information-retention term; when left as
    None it defaults to ln(genes_per_expert) so both objective terms share
    a comparable scale. ``gamma`` is the minimum same-state probability the
    representation constraint asks of embedded neighbors.
    """

    k: int = 8
    lam: float | None = None
    gamma: float = 0.1
    beta: float = 1.0
    learning_rate: float = 0.1
    epochs: int = 300
    batch_size: int = 256
    temperature_start: float = 1.0
    temperature_end: float = 0.1
    genes_per_expert: int = 32
    latent_dim: int = 16
    seed: int = 0
    bins: int = 16

    def __post_init__(self):
        if self.k < 2:
            raise InvalidConfig("k must be >= 2")
        if not 0.0 < self.gamma < 1.0:
            raise InvalidConfig("gamma must lie in (0, 1)")
        if self.temperature_end <= 0 or self.temperature_start <= 0:
            raise InvalidConfig("temperatures must be positive")
        if self.epochs < 1:
            raise InvalidConfig("epochs must be >= 1")
        if self.learning_rate <= 0:
            raise InvalidConfig("learning_rate must be positive")
        if self.beta < 0:
            raise InvalidConfig("beta must be nonnegative")
        if self.batch_size < 1:
            raise InvalidConfig("batch_size must be >= 1")
        if self.genes_per_expert < 1:
            raise InvalidConfig("genes_per_expert must be >= 1")
        if self.latent_dim < 2:
            raise InvalidConfig("latent_dim must be >= 2 (expert anchors span a plane)")
        if self.bins < 2:
            raise InvalidConfig("bins must be >= 2")

    @property
    def effective_lambda(self) -> float:
        return math.log(self.genes_per_expert) if self.lam is None else self.lam

    def replace(self, **kwargs: Any) -> "MinerConfig":
        data = asdict(self)
        data.update(kwargs)
        return MinerConfig(**data)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "MinerConfig":
        return cls(**data)
