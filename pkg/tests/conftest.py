import numpy as np
import pytest

from cellscout.bench import SyntheticSpec, generate_synthetic
from cellscout.data import ExpressionMatrix, normalize
from cellscout.miner import MinerConfig, train


@pytest.fixture
def tiny_matrix() -> ExpressionMatrix:
    return ExpressionMatrix(
        values=np.array([[1.0, 2.0], [3.0, 4.0]]),
        cell_ids=["c1", "c2"],
        gene_names=["gA", "gB"],
    )


@pytest.fixture(scope="session")
def planted_small():
    """60 cells x 20 genes, 3 planted states; enough signal to train fast."""
    spec = SyntheticSpec(
        n_states=3, cells_per_state=20, n_genes=20, markers_per_state=4,
        marker_lift=3.0, noise_sd=1.0, seed=11,
    )
    raw, labels, markers = generate_synthetic(spec)
    return normalize(raw), labels, markers


@pytest.fixture(scope="session")
def trained_small(planted_small):
    matrix, labels, markers = planted_small
    config = MinerConfig(k=3, epochs=120, seed=2, genes_per_expert=8, batch_size=64)
    return train(matrix, config), matrix, labels, markers
