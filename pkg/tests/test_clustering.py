"""Codebook clustering: feature spaces, k-means, GMM, elbow, quality scores."""

import numpy as np
import pytest
from sklearn.metrics import (
    calinski_harabasz_score,
    davies_bouldin_score,
    silhouette_score,
)

from somkit.clustering import (
    ClusterAlgorithm,
    ClusterSpace,
    ClusterSpaceKind,
    cluster_features,
    compare,
    comparison_to_csv,
    elbow,
    gmm,
    kmeans,
    quality,
)
from somkit.errors import ParameterError, ShapeError
from somkit.grid import GridTopology, Topology, planar_positions
from somkit.som import SomModel


def blob_points(rng, centers, per_center, std=0.3):
    parts, labels = [], []
    for i, c in enumerate(centers):
        parts.append(np.asarray(c) + std * rng.normal(size=(per_center, len(c))))
        labels.append(np.full(per_center, i))
    return np.vstack(parts), np.concatenate(labels)


def purity(assignment, truth):
    """Fraction of points whose cluster's majority true label matches theirs."""
    hits = 0
    for c in np.unique(assignment):
        members = truth[assignment == c]
        hits += np.bincount(members).max()
    return hits / len(truth)


class TestClusterFeatures:
    def test_weights_space_is_an_independent_copy(self):
        rng = np.random.default_rng(0)
        topo = GridTopology(Topology.RECTANGULAR, 3, 4)
        model = SomModel(topo, 5, rng.normal(size=(12, 5)))
        feats = cluster_features(model, ClusterSpace(ClusterSpaceKind.WEIGHTS))
        np.testing.assert_array_equal(feats, model.weights)
        feats[0, 0] += 1.0
        assert model.weights[0, 0] != feats[0, 0]

    def test_positions_space_is_min_max_normalized(self):
        topo = GridTopology(Topology.HEXAGONAL, 4, 3)
        model = SomModel(topo, 2, np.zeros((12, 2)))
        feats = cluster_features(model, ClusterSpace(ClusterSpaceKind.POSITIONS))
        assert feats.shape == (12, 2)
        np.testing.assert_allclose(feats.min(axis=0), [0.0, 0.0])
        np.testing.assert_allclose(feats.max(axis=0), [1.0, 1.0])
        # normalization preserves the planar layout up to scale and shift
        pos = planar_positions(topo)
        span = pos.max(axis=0) - pos.min(axis=0)
        np.testing.assert_allclose(feats, (pos - pos.min(axis=0)) / span, atol=1e-15)

    def test_single_row_grid_has_constant_y_column(self):
        topo = GridTopology(Topology.RECTANGULAR, 1, 5)
        model = SomModel(topo, 2, np.zeros((5, 2)))
        feats = cluster_features(model, ClusterSpace(ClusterSpaceKind.POSITIONS))
        np.testing.assert_array_equal(feats[:, 1], np.zeros(5))
        np.testing.assert_allclose(feats[:, 0], np.linspace(0, 1, 5))

    def test_combined_space_z_scores_weights_and_appends_positions(self):
        rng = np.random.default_rng(3)
        topo = GridTopology(Topology.RECTANGULAR, 4, 4)
        model = SomModel(topo, 3, rng.normal(2.0, 5.0, size=(16, 3)))
        space = ClusterSpace(ClusterSpaceKind.COMBINED, position_weight=0.25)
        feats = cluster_features(model, space)
        assert feats.shape == (16, 5)
        np.testing.assert_allclose(feats[:, :3].mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(feats[:, :3].std(axis=0), 1.0, atol=1e-12)
        plain = cluster_features(model, ClusterSpace(ClusterSpaceKind.POSITIONS))
        np.testing.assert_allclose(feats[:, 3:], 0.25 * plain, atol=1e-15)

    def test_zero_variance_weight_column_maps_to_zeros(self):
        topo = GridTopology(Topology.RECTANGULAR, 2, 3)
        w = np.column_stack([np.full(6, 7.0), np.arange(6.0)])
        model = SomModel(topo, 2, w)
        feats = cluster_features(model, ClusterSpace(ClusterSpaceKind.COMBINED))
        np.testing.assert_array_equal(feats[:, 0], np.zeros(6))

    def test_space_kinds_accept_strings(self):
        assert ClusterSpace("weights").kind is ClusterSpaceKind.WEIGHTS
        assert ClusterSpace("combined", 2.0).position_weight == 2.0

    def test_position_weight_must_be_positive(self):
        with pytest.raises(ParameterError):
            ClusterSpace(ClusterSpaceKind.COMBINED, position_weight=0.0)


class TestKMeans:
    def test_recovers_well_separated_blobs(self):
        rng = np.random.default_rng(1)
        x, truth = blob_points(rng, [(0, 0), (8, 0), (0, 8)], 40)
        res = kmeans(x, 3, seed=5)
        assert res.k == 3
        assert res.objective_name == "inertia"
        assert purity(res.assignment, truth) == 1.0

    def test_deterministic_per_seed(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(80, 4))
        a = kmeans(x, 5, seed=11)
        b = kmeans(x, 5, seed=11)
        np.testing.assert_array_equal(a.assignment, b.assignment)
        np.testing.assert_array_equal(a.centroids, b.centroids)
        assert a.objective == b.objective
        assert a.history == b.history

    def test_history_is_non_increasing(self):
        for seed in range(10):
            rng = np.random.default_rng(seed)
            x = rng.normal(size=(60, 3))
            hist = kmeans(x, 4, seed=seed).history
            assert len(hist) >= 2
            for prev, cur in zip(hist, hist[1:]):
                assert cur <= prev + 1e-9 * max(1.0, abs(prev))

    def test_objective_matches_recomputed_inertia(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=(50, 3))
        res = kmeans(x, 4, seed=0)
        inertia = sum(
            float(((row - res.centroids[c]) ** 2).sum())
            for row, c in zip(x, res.assignment)
        )
        assert res.objective == pytest.approx(inertia, rel=1e-12)
        assert res.history[-1] == res.objective

    def test_k_equal_to_distinct_rows_reaches_zero_inertia(self):
        rng = np.random.default_rng(6)
        x = rng.normal(size=(12, 2))
        res = kmeans(x, 12, seed=3)
        assert res.objective == 0.0
        assert sorted(res.assignment) == list(range(12))

    def test_every_cluster_is_populated(self):
        rng = np.random.default_rng(7)
        x = rng.normal(size=(40, 2))
        for k in (2, 5, 9):
            res = kmeans(x, k, seed=1)
            assert set(np.unique(res.assignment)) == set(range(k))

    def test_validation(self):
        x = np.zeros((5, 2))
        with pytest.raises(ParameterError):
            kmeans(x, 0, seed=0)
        with pytest.raises(ParameterError):
            kmeans(x, 6, seed=0)
        with pytest.raises(ShapeError):
            kmeans(np.zeros(5), 2, seed=0)
        bad = x.copy()
        bad[2, 1] = np.nan
        with pytest.raises(ParameterError):
            kmeans(bad, 2, seed=0)


class TestGmm:
    def test_log_likelihood_history_is_non_decreasing(self):
        for seed in range(10):
            rng = np.random.default_rng(100 + seed)
            x = rng.normal(size=(70, 3))
            hist = gmm(x, 3, seed=seed).history
            assert len(hist) >= 2
            for prev, cur in zip(hist, hist[1:]):
                assert cur >= prev - 1e-9 * max(1.0, abs(prev))

    def test_deterministic_per_seed(self):
        rng = np.random.default_rng(8)
        x = rng.normal(size=(60, 2))
        a = gmm(x, 4, seed=2)
        b = gmm(x, 4, seed=2)
        np.testing.assert_array_equal(a.assignment, b.assignment)
        np.testing.assert_array_equal(a.centroids, b.centroids)
        assert a.history == b.history

    def test_separates_tight_blobs(self):
        rng = np.random.default_rng(9)
        x, truth = blob_points(rng, [(-4, -4), (4, 4)], 50, std=0.2)
        res = gmm(x, 2, seed=0)
        assert res.objective_name == "log_likelihood"
        assert purity(res.assignment, truth) == 1.0

    def test_variance_floor_keeps_degenerate_data_finite(self):
        x = np.repeat([[0.0, 0.0], [1.0, 1.0]], 5, axis=0)
        res = gmm(x, 2, seed=0, reg=1e-6)
        assert np.isfinite(res.objective)
        assert all(np.isfinite(v) for v in res.history)
        assert purity(res.assignment, np.repeat([0, 1], 5)) == 1.0

    def test_improves_on_its_initialization(self):
        rng = np.random.default_rng(10)
        x = rng.normal(size=(90, 3))
        hist = gmm(x, 4, seed=1).history
        assert hist[-1] >= hist[0]

    def test_validation(self):
        x = np.zeros((6, 2))
        with pytest.raises(ParameterError):
            gmm(x, 7, seed=0)
        with pytest.raises(ParameterError):
            gmm(x, 2, seed=0, tol=0.0)
        with pytest.raises(ParameterError):
            gmm(x, 2, seed=0, reg=-1.0)


class TestElbow:
    def test_selects_three_on_three_blobs(self):
        rng = np.random.default_rng(12)
        x, _ = blob_points(rng, [(0, 0), (10, 0), (0, 10)], 50)
        res = elbow(x, range(2, 9), seed=0)
        assert res.selected_k == 3
        assert res.ks == [2, 3, 4, 5, 6, 7, 8]
        assert len(res.inertias) == 7

    def test_inertia_curve_is_non_increasing(self):
        rng = np.random.default_rng(13)
        x = rng.normal(size=(80, 4))
        res = elbow(x, range(2, 10), seed=4)
        for prev, cur in zip(res.inertias, res.inertias[1:]):
            assert cur <= prev + 1e-9 * max(1.0, abs(prev))

    def test_selected_k_maximizes_second_difference(self):
        rng = np.random.default_rng(14)
        x, _ = blob_points(rng, [(0, 0), (6, 6), (-6, 6), (6, -6)], 30)
        res = elbow(x, range(2, 8), seed=1)
        second = [
            res.inertias[i - 1] - 2 * res.inertias[i] + res.inertias[i + 1]
            for i in range(1, len(res.ks) - 1)
        ]
        assert res.selected_k == res.ks[int(np.argmax(second)) + 1]

    def test_validation(self):
        x = np.zeros((10, 2))
        with pytest.raises(ParameterError):
            elbow(x, [2, 3], seed=0)
        with pytest.raises(ParameterError):
            elbow(x, [2, 4, 3], seed=0)
        with pytest.raises(ParameterError):
            elbow(x, [2, 2, 3], seed=0)
        with pytest.raises(ParameterError):
            elbow(x, [2, 3, 11], seed=0)


class TestQuality:
    def test_matches_reference_scores(self):
        for seed in range(5):
            rng = np.random.default_rng(200 + seed)
            x = rng.normal(size=(90, 4))
            labels = kmeans(x, 2 + seed % 3, seed=seed).assignment
            q = quality(x, labels)
            assert q.silhouette == pytest.approx(silhouette_score(x, labels), abs=1e-8)
            assert q.davies_bouldin == pytest.approx(
                davies_bouldin_score(x, labels), abs=1e-8
            )
            assert q.calinski_harabasz == pytest.approx(
                calinski_harabasz_score(x, labels), rel=1e-8
            )

    def test_singleton_cluster_gets_silhouette_zero(self):
        x = np.array([[0.0, 0.0], [0.1, 0.0], [0.0, 0.1], [50.0, 50.0]])
        labels = np.array([0, 0, 0, 1])
        q = quality(x, labels)
        assert q.silhouette == pytest.approx(silhouette_score(x, labels), abs=1e-8)
        # the singleton contributes exactly 0, so the mean is 3/4 of the rest
        member_scores = []
        for i in range(3):
            a = np.mean([np.linalg.norm(x[i] - x[j]) for j in range(3) if j != i])
            b = np.linalg.norm(x[i] - x[3])
            member_scores.append((b - a) / max(a, b))
        assert q.silhouette == pytest.approx(sum(member_scores) / 4, abs=1e-12)

    def test_zero_within_dispersion_conventions(self):
        x = np.repeat([[0.0, 0.0], [3.0, 4.0]], 4, axis=0)
        q = quality(x, np.repeat([0, 1], 4))
        assert q.calinski_harabasz == 1.0
        assert q.silhouette == 1.0
        assert q.davies_bouldin == 0.0

    def test_labels_need_not_be_dense(self):
        rng = np.random.default_rng(15)
        x = rng.normal(size=(30, 3))
        labels = kmeans(x, 3, seed=0).assignment
        relabeled = np.array([10, 40, 70])[labels]
        a = quality(x, labels)
        b = quality(x, relabeled)
        assert a.silhouette == b.silhouette
        assert a.davies_bouldin == b.davies_bouldin
        assert a.calinski_harabasz == b.calinski_harabasz

    def test_validation(self):
        x = np.zeros((4, 2))
        with pytest.raises(ParameterError):
            quality(x, np.zeros(4, dtype=int))
        with pytest.raises(ShapeError):
            quality(x, np.array([0, 1]))


class TestCompare:
    @staticmethod
    def trained_like_model(seed=0):
        rng = np.random.default_rng(seed)
        topo = GridTopology(Topology.RECTANGULAR, 5, 4)
        centers = np.array([[0.0, 0.0, 0.0], [6.0, 6.0, 0.0], [0.0, 6.0, 6.0]])
        w = centers[rng.integers(0, 3, size=20)] + 0.4 * rng.normal(size=(20, 3))
        return SomModel(topo, 3, w)

    def test_produces_one_scored_row_per_space_algorithm_pair(self):
        rows = compare(self.trained_like_model(), k=3, seed=0)
        assert len(rows) == 6
        assert [(r.space, r.algorithm) for r in rows] == [
            ("weights", "kmeans"),
            ("weights", "gmm"),
            ("positions", "kmeans"),
            ("positions", "gmm"),
            ("combined", "kmeans"),
            ("combined", "gmm"),
        ]
        for r in rows:
            assert r.k == 3
            expected = "inertia" if r.algorithm == "kmeans" else "log_likelihood"
            assert r.objective_name == expected
            assert np.isfinite(r.silhouette)
            assert -1.0 <= r.silhouette <= 1.0

    def test_rows_reproduce_direct_calls(self):
        model = self.trained_like_model(3)
        rows = compare(
            model,
            k=3,
            seed=7,
            spaces=(ClusterSpace(ClusterSpaceKind.WEIGHTS),),
            algorithms=(ClusterAlgorithm.KMEANS,),
        )
        assert len(rows) == 1
        feats = cluster_features(model, ClusterSpace(ClusterSpaceKind.WEIGHTS))
        direct = kmeans(feats, 3, seed=7)
        assert rows[0].objective == direct.objective
        q = quality(feats, direct.assignment)
        assert rows[0].silhouette == q.silhouette

    def test_algorithms_accept_strings(self):
        rows = compare(
            self.trained_like_model(),
            k=2,
            seed=0,
            spaces=(ClusterSpace("positions"),),
            algorithms=("gmm",),
        )
        assert [r.algorithm for r in rows] == ["gmm"]

    def test_csv_round_trips_every_float_exactly(self):
        rows = compare(self.trained_like_model(1), k=3, seed=2)
        text = comparison_to_csv(rows)
        lines = text.strip().split("\n")
        header = (
            "space,algorithm,k,objective,objective_name,"
            "silhouette,davies_bouldin,calinski_harabasz"
        )
        assert lines[0] == header
        assert len(lines) == 7
        for line, row in zip(lines[1:], rows):
            cells = line.split(",")
            assert cells[0] == row.space
            assert cells[1] == row.algorithm
            assert int(cells[2]) == row.k
            assert float(cells[3]) == row.objective
            assert cells[4] == row.objective_name
            assert float(cells[5]) == row.silhouette
            assert float(cells[6]) == row.davies_bouldin
            assert float(cells[7]) == row.calinski_harabasz
