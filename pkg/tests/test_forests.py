import math

import numpy as np
import pytest

from forestwatch.errors import DegenerateDataset, DimensionMismatch
from forestwatch.forests import (
    IfConfig,
    RfConfig,
    avg_path_c,
    if_score,
    rf_predict,
    rf_predict_proba,
    score_from_mean_path,
    train_isolation_forest,
    train_random_forest,
)

from oracles import average_path_length


def two_clusters(n_per=20, gap=50.0, seed=0):
    rng = np.random.default_rng(seed)
    a = rng.normal(0.0, 1.0, size=(n_per, 2))
    b = rng.normal(gap, 1.0, size=(n_per, 2))
    X = np.vstack([a, b])
    y = ["low"] * n_per + ["high"] * n_per
    return X, y


class TestRandomForest:
    def test_separable_clusters_perfect_training_accuracy(self):
        X, y = two_clusters()
        m = train_random_forest(X, y, RfConfig(num_trees=100, rng_seed=1))
        preds = [rf_predict(m, row) for row in X]
        assert preds == y

    def test_single_class_rejected(self):
        X = np.zeros((10, 2))
        with pytest.raises(DegenerateDataset):
            train_random_forest(X, ["a"] * 10)

    def test_determinism(self):
        X, y = two_clusters(seed=3)
        m1 = train_random_forest(X, y, RfConfig(num_trees=20, rng_seed=9))
        m2 = train_random_forest(X, y, RfConfig(num_trees=20, rng_seed=9))
        assert m1.trees == m2.trees
        assert m1.class_names == m2.class_names

    def test_proba_sums_to_one(self):
        X, y = two_clusters(seed=5)
        m = train_random_forest(X, y, RfConfig(num_trees=30, rng_seed=2))
        rng = np.random.default_rng(0)
        for _ in range(50):
            x = rng.normal(25, 30, size=2)
            p = rf_predict_proba(m, x)
            assert p.sum() == pytest.approx(1.0, abs=1e-9)
            assert np.all(p >= 0)

    def test_unanimous_vote(self):
        X, y = two_clusters(seed=7)
        m = train_random_forest(X, y, RfConfig(num_trees=50, rng_seed=4))
        p = rf_predict_proba(m, np.array([0.0, 0.0]))
        # class order is sorted: ("high", "low")
        assert m.class_names == ("high", "low")
        assert p[1] == pytest.approx(1.0)

    def test_tie_breaks_to_lowest_class_index(self):
        # two one-point classes: every tree bootstraps one side or degenerates,
        # so craft the tie directly through averaged leaf histograms instead
        from forestwatch.forests import RandomForestModel

        m = RandomForestModel(
            trees=[{"counts": [1, 0]}, {"counts": [0, 1]}],
            class_names=("a", "b"),
            n_features=1,
            config=RfConfig(num_trees=2),
        )
        p = rf_predict_proba(m, np.array([0.0]))
        np.testing.assert_allclose(p, [0.5, 0.5])
        assert rf_predict(m, np.array([0.0])) == "a"

    def test_dimension_mismatch(self):
        X, y = two_clusters()
        m = train_random_forest(X, y, RfConfig(num_trees=5))
        with pytest.raises(DimensionMismatch):
            rf_predict_proba(m, np.zeros(3))

    def test_multiclass(self):
        rng = np.random.default_rng(11)
        centers = [(0, 0), (40, 0), (0, 40)]
        X = np.vstack([rng.normal(c, 1.0, size=(15, 2)) for c in centers])
        y = sum(([f"c{i}"] * 15 for i in range(3)), [])
        m = train_random_forest(X, y, RfConfig(num_trees=60, rng_seed=6))
        assert [rf_predict(m, row) for row in X] == y


class TestAvgPathC:
    def test_small_values(self):
        assert avg_path_c(0) == 0.0
        assert avg_path_c(1) == 0.0
        assert avg_path_c(2) == 1.0

    def test_c256_matches_independent_evaluation(self):
        expected = 2 * (math.log(255) + 0.5772156649) - 2 * 255 / 256
        assert avg_path_c(256) == pytest.approx(expected, abs=1e-12)
        assert avg_path_c(256) == pytest.approx(average_path_length(256), abs=1e-12)

    def test_monotone_increasing(self):
        values = [avg_path_c(n) for n in range(2, 2000)]
        assert all(b > a for a, b in zip(values, values[1:]))


class TestIsolationForest:
    def test_two_points(self):
        X = np.array([[0.0], [1.0]])
        m = train_isolation_forest(X, IfConfig(num_trees=25, rng_seed=0))
        for tree in m.itrees:
            assert "v" in tree
            assert tree["l"] == {"size": 1}
            assert tree["r"] == {"size": 1}

    def test_identical_points(self):
        X = np.ones((10, 3))
        m = train_isolation_forest(X, IfConfig(num_trees=10, rng_seed=1))
        for tree in m.itrees:
            assert tree == {"size": m.subsample}

    def test_determinism(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(80, 4))
        m1 = train_isolation_forest(X, IfConfig(num_trees=15, rng_seed=3))
        m2 = train_isolation_forest(X, IfConfig(num_trees=15, rng_seed=3))
        assert m1.itrees == m2.itrees

    def test_too_few_points(self):
        with pytest.raises(DegenerateDataset):
            train_isolation_forest(np.array([[1.0]]))

    def test_height_limit(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(600, 3))
        m = train_isolation_forest(X, IfConfig(num_trees=20, subsample=256, rng_seed=5))
        limit = math.ceil(math.log2(m.subsample))

        def depth(node, d=0):
            if "size" in node:
                return d
            return max(depth(node["l"], d + 1), depth(node["r"], d + 1))

        assert all(depth(t) <= limit for t in m.itrees)

    def test_score_half_at_average_path(self):
        # forest over 2 points: every path is 1 edge + c(1) = 1 = c(psi=2)
        X = np.array([[0.0], [10.0]])
        m = train_isolation_forest(X, IfConfig(num_trees=40, rng_seed=6))
        assert m.subsample == 2
        assert if_score(m, np.array([5.0])) == pytest.approx(0.5)

    def test_score_formula_limits(self):
        assert score_from_mean_path(0.0, 256) == 1.0
        assert score_from_mean_path(avg_path_c(256), 256) == pytest.approx(0.5)

    def test_score_range_and_monotonicity(self):
        psi = 128
        paths = np.linspace(0.0, 3 * avg_path_c(psi), 40)
        scores = [score_from_mean_path(p, psi) for p in paths]
        assert all(0 < s <= 1 for s in scores)
        assert all(b < a for a, b in zip(scores, scores[1:]))

    def test_outlier_scores_highest_over_ten_seeds(self):
        for seed in range(10):
            rng = np.random.default_rng(seed)
            cluster = rng.normal(0.0, 1.0, size=(100, 2))
            outlier = np.array([25.0, 25.0])
            X = np.vstack([cluster, outlier])
            m = train_isolation_forest(X, IfConfig(num_trees=100, rng_seed=seed))
            out_score = if_score(m, outlier)
            cluster_scores = [if_score(m, row) for row in cluster]
            assert out_score > max(cluster_scores)

    def test_dimension_mismatch(self):
        X = np.zeros((5, 2))
        X[:, 0] = np.arange(5)
        m = train_isolation_forest(X, IfConfig(num_trees=5))
        with pytest.raises(DimensionMismatch):
            if_score(m, np.zeros(4))
