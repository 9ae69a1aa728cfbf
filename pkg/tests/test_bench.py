import numpy as np
import pytest

from cellscout.bench import (
    SyntheticSpec,
    chi,
    dbi,
    dunn,
    generate_synthetic,
    knn_clustering_accuracy,
    linear_classification_accuracy,
    run_benchmark,
)
from cellscout.errors import (
    DegenerateClusters,
    InvalidSpec,
    MissingClassInTrain,
    TooFewPoints,
)

# the 4-point fixture with hand-computed index values
FIXTURE_POINTS = np.array([[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0]])
FIXTURE_LABELS = np.array([0, 0, 1, 1])


class TestGenerator:
    def test_shapes_and_labels(self):
        spec = SyntheticSpec(n_states=3, cells_per_state=50, n_genes=30, markers_per_state=5)
        matrix, labels, markers = generate_synthetic(spec)
        assert matrix.m == 150 and matrix.n == 30
        assert labels.tolist() == [0] * 50 + [1] * 50 + [2] * 50
        assert len(markers) == 3 and all(len(ms) == 5 for ms in markers)
        flattened = [g for ms in markers for g in ms]
        assert len(set(flattened)) == 15  # disjoint blocks

    def test_zero_noise_makes_state_cells_identical(self):
        spec = SyntheticSpec(
            n_states=2, cells_per_state=4, n_genes=10, markers_per_state=3, noise_sd=0.0
        )
        matrix, labels, _ = generate_synthetic(spec)
        for state in (0, 1):
            rows = matrix.values[labels == state]
            assert np.all(rows == rows[0])

    def test_marker_lift_visible_in_means(self):
        spec = SyntheticSpec(seed=3)
        matrix, labels, markers = generate_synthetic(spec)
        for state, marker_set in enumerate(markers):
            for gene in marker_set:
                col = matrix.gene_names.index(gene)
                inside = matrix.values[labels == state, col].mean()
                outside = matrix.values[labels != state, col].mean()
                assert inside > outside

    def test_deterministic_per_seed(self):
        a, _, _ = generate_synthetic(SyntheticSpec(seed=9))
        b, _, _ = generate_synthetic(SyntheticSpec(seed=9))
        assert np.array_equal(a.values, b.values)

    def test_invalid_spec(self):
        with pytest.raises(InvalidSpec):
            SyntheticSpec(n_states=4, n_genes=10, markers_per_state=5)


def brute_force_knn_accuracy(points, labels, k):
    m = len(points)
    correct = 0
    for i in range(m):
        d2 = [(float(np.sum((points[i] - points[j]) ** 2)), j) for j in range(m) if j != i]
        d2.sort()
        votes = {}
        for _, j in d2[:k]:
            votes[labels[j]] = votes.get(labels[j], 0) + 1
        top = max(votes.values())
        winner = min(label for label, count in votes.items() if count == top)
        correct += winner == labels[i]
    return correct / m


class TestKnnAccuracy:
    def test_two_blobs_k1(self):
        rng = np.random.default_rng(0)
        points = np.vstack(
            [rng.normal([0, 0], 0.2, size=(15, 2)), rng.normal([8, 8], 0.2, size=(15, 2))]
        )
        labels = np.array([0] * 15 + [1] * 15)
        assert knn_clustering_accuracy(points, labels, k=1) == 1.0

    def test_six_point_fixture_matches_oracle(self):
        points = np.array([[0, 0], [0, 1], [1, 0], [5, 5], [5, 6], [6, 4]], dtype=float)
        labels = np.array([0, 0, 0, 1, 1, 1])
        ours = knn_clustering_accuracy(points, labels, k=3)
        assert ours == brute_force_knn_accuracy(points, labels, 3)

    def test_random_instances_match_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(25):
            m = int(rng.integers(8, 51))
            points = rng.normal(size=(m, 2))
            labels = rng.integers(0, 3, size=m)
            if np.unique(labels).size < 2:
                continue
            k = int(rng.integers(1, 6))
            assert knn_clustering_accuracy(points, labels, k) == pytest.approx(
                brute_force_knn_accuracy(points, labels, k)
            )

    def test_random_labels_near_chance(self):
        rng = np.random.default_rng(2)
        points = rng.uniform(size=(1000, 2))
        labels = rng.integers(0, 4, size=1000)
        acc = knn_clustering_accuracy(points, labels, k=5)
        assert abs(acc - 0.25) < 0.1

    def test_too_few_points(self):
        with pytest.raises(TooFewPoints):
            knn_clustering_accuracy(np.zeros((3, 2)), np.array([0, 1, 0]), k=5)


class TestLinearClassifier:
    def test_separable_blobs(self):
        rng = np.random.default_rng(3)
        points = np.vstack(
            [rng.normal([0, 0], 0.3, size=(40, 2)), rng.normal([6, 6], 0.3, size=(40, 2))]
        )
        labels = np.array([0] * 40 + [1] * 40)
        assert linear_classification_accuracy(points, labels, split_seed=0) == 1.0

    def test_label_independent_near_majority_rate(self):
        rng = np.random.default_rng(4)
        points = rng.uniform(size=(1000, 2))
        labels = (rng.uniform(size=1000) < 0.6).astype(int)  # 60/40 majority
        acc = linear_classification_accuracy(points, labels, split_seed=1)
        majority = max(labels.mean(), 1 - labels.mean())
        assert abs(acc - majority) < 0.1

    def test_deterministic_per_seed(self):
        rng = np.random.default_rng(5)
        points = rng.normal(size=(60, 2))
        labels = rng.integers(0, 2, size=60)
        a = linear_classification_accuracy(points, labels, split_seed=7)
        b = linear_classification_accuracy(points, labels, split_seed=7)
        assert a == b

    def test_missing_class_in_train(self):
        points = np.random.default_rng(6).normal(size=(10, 2))
        labels = np.array([0] * 9 + [1])
        # any 80/20 split seeded like this puts the single "1" in test
        with pytest.raises(MissingClassInTrain):
            for seed in range(50):
                linear_classification_accuracy(points, labels, split_seed=seed)


class TestValidityIndices:
    def test_fixture_values_exact(self):
        assert chi(FIXTURE_POINTS, FIXTURE_LABELS) == pytest.approx(200.0, abs=1e-9)
        assert dbi(FIXTURE_POINTS, FIXTURE_LABELS) == pytest.approx(0.1, abs=1e-9)
        assert dunn(FIXTURE_POINTS, FIXTURE_LABELS) == pytest.approx(10.0, abs=1e-9)

    def test_duplication_behaviour(self):
        doubled = np.vstack([FIXTURE_POINTS, FIXTURE_POINTS])
        labels = np.concatenate([FIXTURE_LABELS, FIXTURE_LABELS])
        # BSS and WSS double while n goes 4 -> 8: (200/1)/(2/6) = 600
        assert chi(doubled, labels) == pytest.approx(600.0, abs=1e-9)
        assert dbi(doubled, labels) == pytest.approx(0.1, abs=1e-9)
        assert dunn(doubled, labels) == pytest.approx(10.0, abs=1e-9)

    def test_rigid_motion_invariance(self):
        rng = np.random.default_rng(7)
        points = rng.normal(size=(40, 2))
        labels = rng.integers(0, 3, size=40)
        base = (chi(points, labels), dbi(points, labels), dunn(points, labels))
        for _ in range(5):
            angle = rng.uniform(0, 2 * np.pi)
            rot = np.array(
                [[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]]
            )
            moved = points @ rot.T + rng.normal(size=2)
            assert chi(moved, labels) == pytest.approx(base[0], abs=1e-9)
            assert dbi(moved, labels) == pytest.approx(base[1], abs=1e-9)
            assert dunn(moved, labels) == pytest.approx(base[2], abs=1e-9)

    def test_single_cluster_rejected(self):
        with pytest.raises(DegenerateClusters):
            chi(FIXTURE_POINTS, np.zeros(4, dtype=int))

    def test_dunn_singleton_clusters_rejected(self):
        points = np.array([[0.0, 0.0], [5.0, 5.0]])
        with pytest.raises(DegenerateClusters):
            dunn(points, np.array([0, 1]))


class TestRunBenchmark:
    def test_report_structure_and_determinism(self, trained_small):
        trained, matrix, labels, _ = trained_small
        a = run_benchmark(matrix, labels, trained, split_seed=0)
        b = run_benchmark(matrix, labels, trained, split_seed=0)
        assert a.to_dict() == b.to_dict()
        csv = a.to_csv()
        assert csv.splitlines()[0] == "method,classification_acc,clustering_acc,chi,dbi,dunn"
        assert len(csv.splitlines()) == 3

    def test_planted_model_close_to_pca(self, trained_small):
        trained, matrix, labels, _ = trained_small
        report = run_benchmark(matrix, labels, trained, split_seed=0)
        assert report.model.clustering_acc >= report.pca.clustering_acc - 0.05
