import json

import numpy as np
import pytest

import cellscout.miner.training as training_mod
from cellscout.errors import InvalidConfig, NonFiniteLoss, TooFewCells
from cellscout.miner import (
    AssociationRelationship,
    MinerConfig,
    MoEModel,
    gradient_check,
    informativeness,
    model_from_dict,
    model_to_dict,
    model_to_json,
    select_k,
    train,
)
from cellscout.miner.objective import LossBreakdown


class TestGradientCheck:
    def test_random_tiny_model(self, planted_small):
        matrix, _, _ = planted_small
        cfg = MinerConfig(k=3, epochs=5, seed=3, genes_per_expert=8)
        model = MoEModel.initialize(matrix.n, cfg, np.random.default_rng(3))
        assert gradient_check(model, matrix, cfg, param_subset=150) < 1e-3

    def test_tied_experts_get_equal_gradients(self, planted_small):
        matrix, _, _ = planted_small
        cfg = MinerConfig(k=3, epochs=5, seed=0, genes_per_expert=8)
        model = MoEModel.initialize(matrix.n, cfg, np.random.default_rng(0))
        # tie experts 0 and 1 plus their gating columns;
        # the loss is then symmetric under swapping them
        for suffix in ("gate", "E1", "c1", "E2", "c2", "S", "d"):
            model.params[f"expert1.{suffix}"] = model.params[f"expert0.{suffix}"].copy()
        model.params["gating.W2"][:, 1] = model.params["gating.W2"][:, 0]
        model.params["gating.b2"][1] = model.params["gating.b2"][0]

        from cellscout.miner.model import forward
        from cellscout.miner.objective import (
            DataStats,
            backprop_params,
            compute_delta,
            loss_with_grads,
            select_crc_pairs,
        )

        stats = DataStats.from_matrix(matrix, cfg.bins)
        out = forward(model, matrix, mode="eval")
        delta = compute_delta(out.embedding_2d)
        pairs = select_crc_pairs(out.embedding_2d, delta)
        _, grad_w, grad_gates = loss_with_grads(out, stats, cfg, delta, pairs=pairs)
        grads = backprop_params(model, out, grad_w, grad_gates)
        assert np.allclose(grads["expert0.gate"], grads["expert1.gate"], atol=1e-12)
        assert np.allclose(grads["gating.W2"][:, 0], grads["gating.W2"][:, 1], atol=1e-12)

    def test_central_difference_error_shrinks_with_h(self, planted_small):
        matrix, _, _ = planted_small
        cfg = MinerConfig(k=3, epochs=5, seed=1, genes_per_expert=8)
        model = MoEModel.initialize(matrix.n, cfg, np.random.default_rng(1))
        idx = np.array([10, 100, 1000])
        coarse = gradient_check(model, matrix, cfg, param_subset=idx, h=2e-2)
        fine = gradient_check(model, matrix, cfg, param_subset=idx, h=1e-2)
        assert fine <= coarse + 1e-12


class TestTrain:
    def test_deterministic_given_seed(self, planted_small):
        matrix, _, _ = planted_small
        cfg = MinerConfig(k=3, epochs=8, seed=5, genes_per_expert=8, batch_size=32)
        a = train(matrix, cfg)
        b = train(matrix, cfg)
        assert np.array_equal(a.model.flatten(), b.model.flatten())
        for aa, ab in zip(a.associations, b.associations):
            assert np.array_equal(aa.relevance, ab.relevance)
            assert np.array_equal(aa.importance, ab.importance)
        assert model_to_json(a) == model_to_json(b)

    def test_history_has_epoch_entries(self, planted_small):
        matrix, _, _ = planted_small
        cfg = MinerConfig(k=2, epochs=7, seed=0, genes_per_expert=8)
        trained = train(matrix, cfg)
        assert len(trained.history) == 7

    def test_loss_decreases_on_planted_data(self, trained_small):
        trained, _, _, _ = trained_small
        totals = [b.total for b in trained.history]
        tenth = max(1, len(totals) // 10)
        assert np.median(totals[-tenth:]) < np.median(totals[:tenth])

    def test_relevance_rows_sum_to_one(self, trained_small):
        trained, _, _, _ = trained_small
        rel = np.stack([a.relevance for a in trained.associations])
        assert np.allclose(rel.sum(axis=0), 1.0, atol=1e-9)

    def test_importance_max_is_one(self, trained_small):
        trained, _, _, _ = trained_small
        for assoc in trained.associations:
            assert assoc.importance.max() == pytest.approx(1.0, abs=1e-12)

    def test_marker_importance_beats_non_marker(self, trained_small):
        trained, matrix, _, markers = trained_small
        marker_cols = [
            [matrix.gene_names.index(g) for g in marker_set] for marker_set in markers
        ]
        all_markers = {c for cols in marker_cols for c in cols}
        non_markers = [q for q in range(matrix.n) if q not in all_markers]
        for assoc in trained.associations:
            own = max(float(assoc.importance[cols].mean()) for cols in marker_cols)
            other = float(assoc.importance[non_markers].mean())
            assert own > other

    def test_converged_run_satisfies_neighborhood_constraint(self, trained_small):
        # embedded neighbors should almost always be likely to share a state
        from cellscout.miner.model import forward
        from cellscout.miner.objective import compute_delta, select_crc_pairs

        trained, matrix, _, _ = trained_small
        out = forward(trained.model, matrix, mode="eval")
        delta = compute_delta(out.embedding_2d)
        pairs = select_crc_pairs(out.embedding_2d, delta, rng=np.random.default_rng(0))
        assert pairs.shape[0] > 0
        w = out.gating_weights
        p_same = (w[pairs[:, 0]] * w[pairs[:, 1]]).sum(axis=1)
        violating = float(np.mean(p_same < trained.config.gamma))
        assert violating < 0.05

    def test_each_expert_top_genes_in_one_marker_set(self, trained_small):
        trained, matrix, _, markers = trained_small
        marker_cols = [
            set(matrix.gene_names.index(g) for g in marker_set) for marker_set in markers
        ]
        for assoc in trained.associations:
            top3 = np.argsort(-assoc.importance, kind="stable")[:3]
            assert any(set(top3) <= cols for cols in marker_cols)

    def test_rejects_raw_matrix(self, planted_small):
        matrix, _, _ = planted_small
        raw_like = type(matrix)(
            values=np.abs(matrix.values),
            cell_ids=matrix.cell_ids,
            gene_names=matrix.gene_names,
            normalized=False,
        )
        with pytest.raises(InvalidConfig):
            train(raw_like, MinerConfig(k=2, epochs=1))

    def test_too_few_cells(self, planted_small):
        matrix, _, _ = planted_small
        small = type(matrix)(
            values=matrix.values[:5],
            cell_ids=matrix.cell_ids[:5],
            gene_names=matrix.gene_names,
            normalized=True,
        )
        with pytest.raises(TooFewCells):
            train(small, MinerConfig(k=2, epochs=1))

    def test_non_finite_loss_aborts_with_epoch(self, planted_small, monkeypatch):
        matrix, _, _ = planted_small

        real = training_mod.loss_with_grads

        def poisoned(*args, **kwargs):
            breakdown, gw, gg = real(*args, **kwargs)
            return LossBreakdown(np.nan, breakdown.mir, breakdown.crc_penalty, np.nan), gw, gg

        monkeypatch.setattr(training_mod, "loss_with_grads", poisoned)
        with pytest.raises(NonFiniteLoss) as err:
            train(matrix, MinerConfig(k=2, epochs=3, seed=0))
        assert err.value.epoch == 0


class TestInformativeness:
    def _assoc_from_labels(self, labels, k):
        m = len(labels)
        rel = np.zeros((k, m))
        for i, label in enumerate(labels):
            rel[label, i] = 1.0
        return [
            AssociationRelationship(index=u, relevance=rel[u], importance=np.ones(3))
            for u in range(k)
        ]

    def test_uniform_split_is_one(self):
        assert informativeness(self._assoc_from_labels([0, 0, 1, 1], 2), 2) == 1.0

    def test_single_expert_is_zero(self):
        assert informativeness(self._assoc_from_labels([0, 0, 0, 0], 2), 2) == 0.0

    def test_hand_value(self):
        value = informativeness(self._assoc_from_labels([0, 0, 0, 1], 2), 2)
        assert value == pytest.approx(0.8113, abs=1e-4)

    def test_k_below_two_rejected(self):
        with pytest.raises(InvalidConfig):
            informativeness(self._assoc_from_labels([0], 1), 1)


class TestSelectK:
    def test_single_candidate(self, planted_small):
        matrix, _, _ = planted_small
        report = select_k(matrix, MinerConfig(k=2, epochs=5, seed=0), [2])
        assert report.chosen_k == 2
        assert len(report.entries) == 1

    def test_candidates_must_be_sorted(self, planted_small):
        matrix, _, _ = planted_small
        with pytest.raises(InvalidConfig):
            select_k(matrix, MinerConfig(k=2, epochs=1), [4, 2])

    def test_failures_recorded_and_sweep_continues(self, planted_small, monkeypatch):
        matrix, _, _ = planted_small

        real_train = training_mod.train

        def flaky(m, config, on_epoch=None):
            if config.k == 3:
                raise NonFiniteLoss(1)
            return real_train(m, config, on_epoch=on_epoch)

        monkeypatch.setattr(training_mod, "train", flaky)
        report = training_mod.select_k(matrix, MinerConfig(k=2, epochs=4, seed=0), [2, 3])
        assert report.entries[1].error is not None
        assert report.entries[0].informativeness is not None
        assert report.chosen_k == 2


class TestSerialization:
    def test_round_trip(self, trained_small):
        trained, matrix, _, _ = trained_small
        data = json.loads(model_to_json(trained))
        assert data["version"] == "cellscout-model/1"
        restored = model_from_dict(data, matrix)
        assert np.array_equal(restored.model.flatten(), trained.model.flatten())
        assert restored.informativeness == trained.informativeness
        assert len(restored.history) == len(trained.history)
        for a, b in zip(restored.associations, trained.associations):
            assert np.array_equal(a.relevance, b.relevance)
            assert np.array_equal(a.importance, b.importance)
        assert np.allclose(restored.embedding.coords, trained.embedding.coords)

    def test_rejects_unknown_version(self, trained_small):
        trained, matrix, _, _ = trained_small
        data = model_to_dict(trained)
        data["version"] = "cellscout-model/999"
        with pytest.raises(InvalidConfig):
            model_from_dict(data, matrix)
