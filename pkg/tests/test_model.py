import numpy as np
import pytest

from cellscout.errors import IndexOutOfRange, NonFiniteLogits
from cellscout.miner import MinerConfig, MoEModel, forward, gumbel_softmax


class TestGumbelSoftmax:
    def test_zero_noise_low_temperature_is_argmax(self):
        out = gumbel_softmax(np.array([10.0, 0.0, 0.0]), 0.01, noise=np.zeros(3))
        assert out[0] > 0.999
        assert abs(out.sum() - 1.0) < 1e-9

    def test_uniform_logits_symmetric_frequencies(self):
        rng = np.random.default_rng(0)
        wins = np.zeros(3)
        for _ in range(10_000):
            wins[np.argmax(gumbel_softmax(np.zeros(3), 1.0, rng=rng))] += 1
        assert np.all(np.abs(wins / 10_000 - 1 / 3) < 0.02)

    def test_zero_noise_unit_temperature_is_softmax(self):
        out = gumbel_softmax(np.array([1.0, 2.0]), 1.0, noise=np.zeros(2))
        assert np.allclose(out, [0.2689, 0.7311], atol=1e-4)

    def test_rows_sum_to_one(self):
        rng = np.random.default_rng(1)
        logits = rng.normal(size=(40, 5))
        out = gumbel_softmax(logits, 0.5, rng=rng)
        assert np.allclose(out.sum(axis=1), 1.0, atol=1e-9)
        assert np.all(out > 0)

    def test_non_finite_logits_rejected(self):
        with pytest.raises(NonFiniteLogits):
            gumbel_softmax(np.array([np.inf, 0.0]), 1.0, noise=np.zeros(2))


class TestForward:
    @pytest.fixture
    def setup(self, planted_small):
        matrix, _, _ = planted_small
        cfg = MinerConfig(k=3, epochs=5, seed=0, genes_per_expert=8)
        model = MoEModel.initialize(matrix.n, cfg, np.random.default_rng(0))
        return model, matrix

    def test_gating_rows_sum_to_one(self, setup):
        model, matrix = setup
        rng = np.random.default_rng(5)
        for mode in ("train", "eval"):
            out = forward(model, matrix, temperature=0.7, mode=mode, rng=rng)
            assert np.allclose(out.gating_weights.sum(axis=1), 1.0, atol=1e-9)

    def test_eval_is_deterministic(self, setup):
        model, matrix = setup
        a = forward(model, matrix, mode="eval")
        b = forward(model, matrix, mode="eval")
        assert np.array_equal(a.gating_weights, b.gating_weights)
        assert np.array_equal(a.embedding_2d, b.embedding_2d)
        assert np.array_equal(a.gene_gates, b.gene_gates)

    def test_identical_cells_identical_outputs(self, setup):
        model, matrix = setup
        out = forward(model, matrix, cell_indices=np.array([4, 4]), mode="eval")
        assert np.array_equal(out.gating_weights[0], out.gating_weights[1])
        assert np.array_equal(out.embedding_2d[0], out.embedding_2d[1])

    def test_gates_lie_in_unit_interval(self, setup):
        model, matrix = setup
        out = forward(model, matrix, mode="eval")
        assert np.all(out.gene_gates >= 0) and np.all(out.gene_gates <= 1)

    def test_index_out_of_range(self, setup):
        model, matrix = setup
        with pytest.raises(IndexOutOfRange):
            forward(model, matrix, cell_indices=np.array([matrix.m]), mode="eval")

    def test_shapes(self, setup):
        model, matrix = setup
        out = forward(model, matrix, cell_indices=np.arange(7), mode="eval")
        assert out.gating_weights.shape == (7, 3)
        assert out.gene_gates.shape == (3, matrix.n)
        assert out.embedding_2d.shape == (7, 2)
        assert out.expert_scores.shape == (7, 3)

    def test_flatten_unflatten_round_trip(self, setup):
        model, _ = setup
        flat = model.flatten()
        clone = model.copy()
        clone.unflatten(flat)
        for name in model.params:
            assert np.array_equal(clone.params[name], model.params[name])
