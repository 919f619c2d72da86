"""Acceptance suite: the shipped guarantees, one printed PASS/FAIL line each.

Each test prints exactly one line of the form

    [criterion NN] PASS - <measured values against the stated bounds>

before asserting, so a plain test run doubles as a checklist of what this
build delivers.  Criteria 1-4 rerun the desk-scale benchmark protocol
(synthetic blobs, 80/20 split, z-scored, PCA init, 100 batch epochs,
Gaussian kernel, Euclidean metric, 10 seeded runs); the rest pin oracle
equivalence, closed forms, clustering behavior, determinism, and rendering.
"""

import math
import time
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pytest

from somkit import analysis, clustering, render, som
from somkit.bench import BenchPlan, run_plan
from somkit.cli import main as cli_main
from somkit.data import BlobSpec, make_blobs
from somkit.grid import GridTopology, Topology
from somkit.kernels import (
    Kernel,
    Metric,
    Schedule,
    feature_distance,
    kernel_value,
    lr_schedule,
    lr_step,
    sigma_schedule,
    sigma_step,
    asymptotic_step,
)

from oracles import (
    assign_naive,
    classification_naive,
    collect_naive,
    feature_dist,
    find_bmu_naive,
    metric_map_naive,
    qe_naive,
    rank_naive,
    score_map_naive,
    te_naive,
)

GOLDEN = Path(__file__).parent / "golden"


def report(num: int, ok: bool, detail: str) -> None:
    line = f"[criterion {num:02d}] {'PASS' if ok else 'FAIL'} - {detail}"
    print(line)
    assert ok, line


def bench_cell(samples: int, features: int, topology=Topology.RECTANGULAR):
    plan = BenchPlan(
        sample_sizes=(samples,),
        feature_counts=(features,),
        topology=topology,
    )
    (row,) = run_plan(plan, threads=1)
    assert row.error == "", row.error
    return row


@pytest.fixture(scope="module")
def small_cell():
    t0 = time.perf_counter()
    row = bench_cell(240, 4)
    return row, time.perf_counter() - t0


class TestBenchmarkReproduction:
    def test_criterion_01_small_cell(self, small_cell):
        row, wall = small_cell
        ok = (
            0.10 <= row.qe_mean <= 0.40
            and row.te_mean <= 0.35
            and row.time_train_s <= 10.0
            and wall < 120.0
        )
        report(
            1, ok,
            f"240x4 rect 25x15: QE {row.qe_mean:.3f} in [0.10, 0.40], "
            f"TE {row.te_mean:.3f} <= 0.35, {row.time_train_s:.2f} s/run <= 10, "
            f"cell total {wall:.1f} s < 120",
        )

    def test_criterion_02_mid_cell(self):
        row = bench_cell(4000, 50)
        ok = 1.4 <= row.qe_mean <= 2.2 and row.te_mean <= 0.30 and row.time_train_s <= 60.0
        report(
            2, ok,
            f"4000x50 rect 25x15: QE {row.qe_mean:.3f} in [1.4, 2.2], "
            f"TE {row.te_mean:.3f} <= 0.30, {row.time_train_s:.2f} s/run <= 60",
        )

    def test_criterion_03_hexagonal_wide_cell(self):
        row = bench_cell(240, 300, topology=Topology.HEXAGONAL)
        ok = 4.8 <= row.qe_mean <= 5.6 and row.te_mean <= 0.40
        report(
            3, ok,
            f"240x300 hex 25x15: QE {row.qe_mean:.3f} in [4.8, 5.6], "
            f"TE {row.te_mean:.3f} <= 0.40",
        )

    def test_criterion_04_batch_scaling_ratio(self, small_cell):
        small, _ = small_cell
        big = bench_cell(16000, 4)
        ratio = big.time_train_s / small.time_train_s
        ok = ratio <= 120.0
        report(
            4, ok,
            f"batch train-time ratio t(16000x4)/t(240x4) = "
            f"{big.time_train_s:.2f}/{small.time_train_s:.2f} = {ratio:.1f} <= 120",
        )


class TestOracleEquivalence:
    def test_criterion_05_fifty_random_instances(self):
        rng = np.random.default_rng(20250813)
        metrics = list(Metric)
        worst = 0.0
        for case in range(50):
            kind = Topology.RECTANGULAR if case % 2 == 0 else Topology.HEXAGONAL
            rows = int(rng.integers(1, 11))
            cols = int(rng.integers(1, 11))
            if rows * cols < 2:
                cols = 2
            dim = int(rng.integers(1, 17))
            n = int(rng.integers(2, 65))
            topo = GridTopology(kind, rows, cols)
            model = som.SomModel(
                topo, dim, rng.normal(size=(topo.n_neurons, dim)), metrics[case % 4]
            )
            data = rng.normal(size=(n, dim))
            targets = rng.normal(size=n)
            labels = rng.integers(0, 4, size=n)

            for x in data[:8]:
                b, bd, s, sd = find_bmu_naive(model, x)
                got = som.find_bmu(model, x)
                assert got.coord == b and got.second == s
                worst = max(worst, abs(got.distance - bd))

            worst = max(worst, abs(som.quantization_error(model, data) - qe_naive(model, data)))
            worst = max(worst, abs(som.topographic_error(model, data) - te_naive(model, data)))

            buffer = analysis.assign(model, data)
            buckets = assign_naive(model, data)
            for got_ix, want_ix in zip(buffer.indices, buckets):
                assert list(got_ix) == want_ix

            for stat in ("mean", "std"):
                got = analysis.metric_map(buffer, targets, stat).values.ravel()
                np.testing.assert_allclose(
                    got, metric_map_naive(buckets, targets, stat),
                    atol=1e-10, equal_nan=True,
                )
            np.testing.assert_allclose(
                analysis.score_map(buffer, targets).values.ravel(),
                score_map_naive(buckets, targets),
                atol=1e-10, equal_nan=True,
            )
            mean_layer = analysis.metric_map(buffer, targets, "mean")
            np.testing.assert_array_equal(
                analysis.rank_map(mean_layer).values.ravel(),
                rank_naive(list(mean_layer.values.ravel())),
            )
            np.testing.assert_array_equal(
                analysis.classification_map(buffer, labels).values.ravel(),
                classification_naive(buckets, labels),
            )

            got = analysis.collect_sample(model, buffer, data, data[0], 5, 3)
            want = collect_naive(model, buckets, data, data[0], 5, 3)
            assert list(got.indices) == want[0]
            np.testing.assert_allclose(got.distances, want[1], atol=1e-10)
            assert got.orders_used == want[2] and got.shortfall == want[3]
        report(
            5, True,
            f"50 random instances (grids <= 10x10, dim <= 16, N <= 64): nine "
            f"operations match naive references, max |err| {worst:.2e} <= 1e-10",
        )


class TestClosedForms:
    def test_criterion_06_kernels_distances_schedules(self):
        rng = np.random.default_rng(6)
        worst = 0.0

        for _ in range(2000):
            d = float(rng.uniform(0.0, 8.0))
            s = float(rng.uniform(0.1, 5.0))
            forms = {
                Kernel.GAUSSIAN: math.exp(-d * d / (2 * s * s)),
                Kernel.MEXICAN_HAT: (1.0 / (math.pi * s**4))
                * (1.0 - d * d / (2 * s * s))
                * math.exp(-d * d / (2 * s * s)),
                Kernel.BUBBLE: 1.0 if d <= s else 0.0,
                Kernel.TRIANGLE: max(0.0, 1.0 - d / s),
            }
            for kern, want in forms.items():
                worst = max(worst, abs(float(kernel_value(kern, d, s)) - want))

        for _ in range(500):
            dim = int(rng.integers(1, 9))
            x = rng.normal(size=dim)
            w = rng.normal(size=dim)
            forms = {
                Metric.EUCLIDEAN: float(np.sqrt(((x - w) ** 2).sum())),
                Metric.MANHATTAN: float(np.abs(x - w).sum()),
                Metric.CHEBYSHEV: float(np.abs(x - w).max()),
                Metric.COSINE: min(
                    2.0,
                    max(
                        0.0,
                        1.0
                        - float(x @ w)
                        / (float(np.linalg.norm(x)) * float(np.linalg.norm(w))),
                    ),
                ),
            }
            for metric, want in forms.items():
                worst = max(worst, abs(feature_distance(metric, x, w) - want))

        # schedules are recurrences on the current value; iterate them directly
        T = 200
        a0, g, s0, th0 = 0.5, 7.0, 12.5, 1.0

        def replay(update, v0):
            vals, v = [], v0
            for tt in range(T):
                vals.append(v)
                v = update(v, tt)
            return np.array(vals)

        pairs = [
            (lr_schedule(Schedule.INVERSE, a0, T, g),
             replay(lambda v, tt: v * g / (g + tt), a0)),
            (lr_schedule(Schedule.INVERSE, a0, T),
             replay(lambda v, tt: v * (T / 100) / (T / 100 + tt), a0)),
            (lr_schedule(Schedule.LINEAR, a0, T),
             replay(lambda v, tt: v * (1 - tt / T), a0)),
            (sigma_schedule(Schedule.INVERSE, s0, T),
             replay(lambda v, tt: v / (1 + tt * (v - 1) / T), s0)),
            (sigma_schedule(Schedule.LINEAR, s0, T),
             replay(lambda v, tt: v + tt * (1 - v) / T, s0)),
        ]
        for got, want in pairs:
            worst = max(worst, float(np.max(np.abs(got - want))))

        theta = th0
        for tt in range(T):
            worst = max(worst, abs(asymptotic_step(theta, tt, T) - theta / (1 + tt / (T / 2))))
            theta = asymptotic_step(theta, tt, T)

        lr_at_T = lr_step(Schedule.LINEAR, lr_schedule(Schedule.LINEAR, a0, T)[-1], T - 1, T)
        final_lr = lr_step(Schedule.LINEAR, lr_at_T, T, T)
        sigma_gap = 0.0
        for kind in (Schedule.INVERSE, Schedule.LINEAR):
            last = sigma_step(kind, sigma_schedule(kind, s0, T)[-1], T - 1, T)
            sigma_gap = max(sigma_gap, abs(last - 1.0))

        ok = worst <= 1e-12 and final_lr == 0.0 and sigma_gap <= 1e-9
        report(
            6, ok,
            f"kernels, distances, schedules: max |err| {worst:.2e} <= 1e-12; "
            f"linear lr at t=T is {final_lr!r}; sigma(T) within {sigma_gap:.1e} of 1",
        )


class TestScoreFunction:
    def test_criterion_07_score_identities(self):
        topo = GridTopology(Topology.RECTANGULAR, 2, 2)
        worst = 0.0

        constant = analysis.NeuronBuffer(
            topo, [np.array([0, 1, 2]), np.array([3]), np.array([], dtype=int), np.array([4, 5])]
        )
        targets = np.array([7.0, 7.0, 7.0, 1.0, 3.0, 3.0])
        zero_spread = analysis.score_map(constant, targets).values[0, 0]
        worst = max(worst, abs(zero_spread))

        all_in_one = analysis.NeuronBuffer(
            topo,
            [np.arange(6), np.array([], dtype=int), np.array([], dtype=int), np.array([], dtype=int)],
        )
        rng = np.random.default_rng(7)
        spread_targets = rng.normal(size=6)
        full_house = analysis.score_map(all_in_one, spread_targets).values[0, 0]
        worst = max(worst, abs(full_house))

        buffer = analysis.NeuronBuffer(
            topo, [np.array([0, 1]), np.array([2, 3, 4]), np.array([5, 6]), np.array([7])]
        )
        base_targets = rng.normal(size=8)
        base = analysis.score_map(buffer, base_targets).values
        for c in (0.5, 2.0, 10.0):
            scaled = analysis.score_map(buffer, c * base_targets).values
            gap = np.nanmax(np.abs(scaled - c * base))
            worst = max(worst, float(gap))

        ok = worst <= 1e-10
        report(
            7, ok,
            f"score: S(sigma=0) = {zero_spread!r}, S(n=N) = {full_house!r}, "
            f"scale covariance for c in {{0.5, 2, 10}}; max |err| {worst:.2e} <= 1e-10",
        )


class TestClustering:
    def test_criterion_08_elbow_silhouette_and_em_monotonicity(self):
        ds = make_blobs(BlobSpec(260, 4, seed=0))
        topo = GridTopology(Topology.HEXAGONAL, 10, 10)
        model = som.init_pca(topo, 4, ds.features)
        som.fit(model, ds.features, som.TrainConfig())
        feats = clustering.cluster_features(
            model, clustering.ClusterSpace(clustering.ClusterSpaceKind.WEIGHTS)
        )

        picked = clustering.elbow(feats, range(2, 9), seed=0)
        km = clustering.kmeans(feats, 3, seed=0)
        sil = clustering.quality(feats, km.assignment).silhouette

        monotone = True
        for seed in range(20):
            hist = clustering.gmm(feats, 3, seed=seed).history
            for prev, cur in zip(hist, hist[1:]):
                if cur < prev - 1e-9 * max(1.0, abs(prev)):
                    monotone = False

        ok = picked.selected_k == 3 and sil >= 0.5 and monotone
        report(
            8, ok,
            f"blobs 260x4 on hex 10x10: elbow(2..8) -> k={picked.selected_k} "
            f"(want 3), kmeans(3) weights silhouette {sil:.3f} >= 0.5, "
            f"GMM log-likelihood non-decreasing across 20 seeds: {monotone}",
        )


class TestDeterminism:
    def test_criterion_09_byte_identical_runs_across_threads(self, tmp_path):
        args = [
            "train", "--blob-samples", "240", "--blob-features", "4",
            "--rows", "10", "--cols", "10", "--epochs", "20",
            "--seed", "5", "--quiet",
        ]
        artifacts = {}
        for threads in (1, 1, 4, 8):
            out = tmp_path / f"t{threads}_{len(artifacts)}"
            code = cli_main(args + ["--out", str(out), "--threads", str(threads)])
            assert code == 0
            artifacts[out] = (
                (out / "model.som").read_bytes(),
                (out / "curves.csv").read_bytes(),
            )
        models = {pair[0] for pair in artifacts.values()}
        curves = {pair[1] for pair in artifacts.values()}
        ok = len(models) == 1 and len(curves) == 1
        report(
            9, ok,
            "two seeded train runs and --threads in {1, 4, 8} produced "
            f"{len(models)} distinct model file(s) and {len(curves)} distinct "
            "curve CSV(s); want 1 and 1",
        )


class TestRendering:
    def test_criterion_10_svg_cells_and_goldens(self):
        rng = np.random.default_rng(10)
        topo = GridTopology(Topology.RECTANGULAR, 25, 15)
        data = make_blobs(BlobSpec(500, 4, seed=1)).features
        model = som.init_pca(topo, 4, data)
        buffer = analysis.assign(model, data)
        targets = rng.normal(size=500)
        labels = rng.integers(0, 3, size=500)
        km = clustering.kmeans(model.weights, 3, seed=0)

        layers = [
            (analysis.u_matrix(model), "sequential"),
            (analysis.hit_map(buffer), "sequential"),
            (analysis.component_plane(model, 0), "sequential"),
            (analysis.metric_map(buffer, targets, "mean"), "sequential"),
            (analysis.metric_map(buffer, targets, "std"), "sequential"),
            (analysis.score_map(buffer, targets), "sequential"),
            (analysis.rank_map(analysis.metric_map(buffer, targets, "mean")), "sequential"),
            (analysis.classification_map(buffer, labels), "categorical"),
            (
                analysis.MapLayer(
                    topo, km.assignment.astype(float).reshape(25, 15), "cluster3"
                ),
                "categorical",
            ),
        ]
        counts = []
        for layer, colormap in layers:
            svg = render.render_map(layer, render.RenderStyle(colormap=colormap))
            root = ET.fromstring(svg)
            counts.append(
                sum(1 for e in root.iter() if e.get("class") == "cell")
            )
        cells_ok = all(c == 375 for c in counts)

        goldens_ok = True
        vals = np.arange(9.0).reshape(3, 3)
        vals[1, 1] = np.nan
        frozen = [
            (
                "map_rect_sequential.svg",
                render.render_map(
                    analysis.MapLayer(GridTopology(Topology.RECTANGULAR, 3, 3), vals, "demo"),
                    render.RenderStyle(title="quantization error"),
                ),
            ),
            (
                "map_hex_categorical.svg",
                render.render_map(
                    analysis.MapLayer(
                        GridTopology(Topology.HEXAGONAL, 3, 3),
                        np.array([[0.0, 1.0, 2.0], [1.0, np.nan, 0.0], [2.0, 2.0, 1.0]]),
                        "classes",
                    ),
                    render.RenderStyle(colormap="categorical"),
                ),
            ),
        ]
        for name, svg in frozen:
            goldens_ok = goldens_ok and svg == (GOLDEN / name).read_text()

        ok = cells_ok and goldens_ok
        report(
            10, ok,
            f"nine 25x15 map layers: cell counts {sorted(set(counts))} (want "
            f"[375]); frozen 3x3 fixtures byte-identical: {goldens_ok}",
        )
