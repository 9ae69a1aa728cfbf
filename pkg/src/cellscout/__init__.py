"""cellscout: mining association relationships between cell populations and
candidate biomarker genes from single-cell expression matrices."""

from .data import (
    ExpressionMatrix,
    NormalizationSpec,
    ValidationReport,
    load_matrix,
    normalize,
    save_matrix,
    validate,
)
from .embedding import Embedding2D, embed_with_model, embed_with_pca, to_polar
from .miner import (
    AssociationRelationship,
    LossBreakdown,
    MinerConfig,
    TrainedModel,
    extract_associations,
    gradient_check,
    informativeness,
    select_k,
    train,
)

__version__ = "0.1.0"
