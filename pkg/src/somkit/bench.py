"""Benchmark harness: blob-grid training runs with QE/TE and timing stats.

Each plan cell (sample size x feature count) repeats ``runs`` times: draw
blobs with seed ``seed0 + run``, hold out a test split, z-score on the
train split, PCA-init, fit, and evaluate QE/TE on the held-out split.
Statistics are mean and population std over the runs.  A failing cell is
recorded with its error message; the other cells still run.
"""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass

import numpy as np

from .data import BlobSpec, make_blobs, split, standardize
from .errors import ParameterError, ParseError, SomkitError
from .grid import GridTopology, Topology
from .kernels import Kernel, Metric, Schedule
from .som import TrainConfig, UpdateMode, evaluate, fit, init_pca

_LARGE_GRID_CELLS = 90 * 70
_LARGE_SAMPLES = 16000
_LARGE_FEATURES = 300


@dataclass(frozen=True)
class BenchPlan:
    """Cross product of sample sizes and feature counts, all other knobs shared."""

    sample_sizes: tuple[int, ...] = (240, 4000)
    feature_counts: tuple[int, ...] = (4, 50)
    rows: int = 25
    cols: int = 15
    topology: Topology = Topology.RECTANGULAR
    epochs: int = 100
    runs: int = 10
    update_mode: UpdateMode = UpdateMode.BATCH
    metric: Metric = Metric.EUCLIDEAN
    kernel: Kernel = Kernel.GAUSSIAN
    lr0: float = 0.5
    sigma0: float | None = None
    lr_schedule: Schedule = Schedule.INVERSE
    sigma_schedule: Schedule = Schedule.INVERSE
    test_fraction: float = 0.2
    standardize: bool = True
    d_th: float = 1.0
    seed0: int = 0

    def __post_init__(self) -> None:
        if not self.sample_sizes or not self.feature_counts:
            raise ParameterError("plan needs at least one sample size and feature count")
        if any(n < 2 for n in self.sample_sizes):
            raise ParameterError("sample sizes must be >= 2 (a split must be possible)")
        if any(k < 1 for k in self.feature_counts):
            raise ParameterError("feature counts must be >= 1")
        if self.runs < 1:
            raise ParameterError(f"runs must be >= 1, got {self.runs}")
        if self.epochs < 1:
            raise ParameterError(f"epochs must be >= 1, got {self.epochs}")


@dataclass
class BenchRow:
    """Aggregated results for one plan cell."""

    samples: int
    features: int
    runs: int
    qe_mean: float = float("nan")
    qe_std: float = float("nan")
    te_mean: float = float("nan")
    te_std: float = float("nan")
    time_init_s: float = float("nan")
    time_train_s: float = float("nan")
    time_metrics_s: float = float("nan")
    error: str = ""


def requires_large(plan: BenchPlan) -> bool:
    """True when the plan leaves the desk-scale envelope and needs --large."""
    if plan.rows * plan.cols >= _LARGE_GRID_CELLS:
        return True
    return any(
        n >= _LARGE_SAMPLES and k >= _LARGE_FEATURES
        for n in plan.sample_sizes
        for k in plan.feature_counts
    )


def _run_cell(plan: BenchPlan, n: int, k: int, threads: int, progress) -> BenchRow:
    topo = GridTopology(plan.topology, plan.rows, plan.cols)
    qes, tes, t_init, t_train, t_metrics = [], [], [], [], []
    for run in range(plan.runs):
        seed = plan.seed0 + run
        ds = make_blobs(BlobSpec(n, k, seed=seed))
        train_ds, test_ds = split(ds, plan.test_fraction, seed)
        if plan.standardize:
            train_ds, scaler = standardize(train_ds)
            test_ds = scaler.transform_dataset(test_ds)
        t0 = time.perf_counter()
        model = init_pca(topo, k, train_ds.features, plan.metric, plan.kernel)
        init_s = time.perf_counter() - t0
        cfg = TrainConfig(
            epochs=plan.epochs,
            lr0=plan.lr0,
            sigma0=plan.sigma0,
            lr_schedule=plan.lr_schedule,
            sigma_schedule=plan.sigma_schedule,
            update_mode=plan.update_mode,
            seed=seed,
            d_th=plan.d_th,
        )
        report = fit(model, train_ds.features, cfg, threads)
        t0 = time.perf_counter()
        qe, te = evaluate(model, test_ds.features, plan.d_th, threads)
        eval_s = time.perf_counter() - t0
        qes.append(qe)
        tes.append(te)
        t_init.append(init_s)
        t_train.append(report.wall_seconds - report.metrics_seconds)
        t_metrics.append(report.metrics_seconds + eval_s)
        if progress:
            progress(
                f"bench {n}x{k} run {run + 1}/{plan.runs}: qe={qe:.4f} te={te:.4f} "
                f"train={t_train[-1]:.2f}s"
            )
    return BenchRow(
        n, k, plan.runs,
        float(np.mean(qes)), float(np.std(qes)),
        float(np.mean(tes)), float(np.std(tes)),
        float(np.mean(t_init)), float(np.mean(t_train)), float(np.mean(t_metrics)),
    )


def run_plan(plan: BenchPlan, threads: int = 1, progress=None) -> list[BenchRow]:
    """Run every cell; a cell that raises is recorded, not fatal."""
    rows: list[BenchRow] = []
    for n in plan.sample_sizes:
        for k in plan.feature_counts:
            try:
                rows.append(_run_cell(plan, n, k, threads, progress))
            except SomkitError as exc:
                rows.append(BenchRow(n, k, plan.runs, error=str(exc)))
                if progress:
                    progress(f"bench {n}x{k} failed: {exc}")
    return rows


_CSV_FIELDS = (
    "samples", "features", "runs", "qe_mean", "qe_std", "te_mean", "te_std",
    "time_init_s", "time_train_s", "time_metrics_s", "error",
)


def render_table(rows: list[BenchRow], fmt: str = "text") -> str:
    """Serialize rows as full-precision CSV or an aligned text table."""
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(_CSV_FIELDS)
        for r in rows:
            writer.writerow(
                [
                    r.samples, r.features, r.runs,
                    repr(r.qe_mean), repr(r.qe_std), repr(r.te_mean), repr(r.te_std),
                    repr(r.time_init_s), repr(r.time_train_s), repr(r.time_metrics_s),
                    r.error,
                ]
            )
        return buf.getvalue()
    if fmt != "text":
        raise ParameterError(f"format must be 'text' or 'csv', got {fmt!r}")
    header = ["samples", "features", "qe", "te", "t_init", "t_train", "t_metrics"]
    body: list[list[str]] = []
    for r in rows:
        if r.error:
            body.append([str(r.samples), str(r.features), f"error: {r.error}", "", "", "", ""])
            continue
        body.append(
            [
                str(r.samples),
                str(r.features),
                f"{r.qe_mean:.2f}±{r.qe_std:.2f}",
                f"{round(r.te_mean * 100)}±{round(r.te_std * 100)}%",
                f"{r.time_init_s:.2f}",
                f"{r.time_train_s:.2f}",
                f"{r.time_metrics_s:.2f}",
            ]
        )
    widths = [max(len(header[i]), *(len(row[i]) for row in body)) if body else len(header[i])
              for i in range(len(header))]
    lines = ["  ".join(h.rjust(widths[i]) for i, h in enumerate(header))]
    for row in body:
        lines.append("  ".join(cell.rjust(widths[i]) for i, cell in enumerate(row)))
    return "\n".join(lines) + "\n"


def parse_table_csv(text: str) -> list[BenchRow]:
    """Read back a CSV written by :func:`render_table`; floats round-trip exactly."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty bench CSV") from None
    if header != list(_CSV_FIELDS):
        raise ParseError(f"unexpected bench CSV header: {header}")
    rows = []
    for lineno, rec in enumerate(reader, start=2):
        if not rec:
            continue
        if len(rec) != len(_CSV_FIELDS):
            raise ParseError(f"bench CSV row {lineno} has {len(rec)} fields")
        try:
            rows.append(
                BenchRow(
                    int(rec[0]), int(rec[1]), int(rec[2]),
                    float(rec[3]), float(rec[4]), float(rec[5]), float(rec[6]),
                    float(rec[7]), float(rec[8]), float(rec[9]), rec[10],
                )
            )
        except ValueError as exc:
            raise ParseError(f"bench CSV row {lineno}: {exc}") from None
    return rows
