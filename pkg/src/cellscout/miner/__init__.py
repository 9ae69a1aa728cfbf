from .config import MinerConfig
from .model import ForwardOutput, MoEModel, forward, gumbel_softmax
from .objective import DataStats, LossBreakdown, compute_delta, compute_loss
from .training import (
    AssociationRelationship,
    KSweepReport,
    TrainedModel,
    extract_associations,
    gradient_check,
    informativeness,
    model_from_dict,
    model_to_dict,
    model_to_json,
    select_k,
    train,
)

__all__ = [
    "MinerConfig",
    "ForwardOutput",
    "MoEModel",
    "forward",
    "gumbel_softmax",
    "DataStats",
    "LossBreakdown",
    "compute_delta",
    "compute_loss",
    "AssociationRelationship",
    "KSweepReport",
    "TrainedModel",
    "extract_associations",
    "gradient_check",
    "informativeness",
    "model_from_dict",
    "model_to_dict",
    "model_to_json",
    "select_k",
    "train",
]
