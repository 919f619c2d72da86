"""Self-organizing map model: initialization, training, evaluation, model I/O.

The codebook is a ``(rows * cols, dim)`` float64 array in row-major neuron
order.  Training supports two update modes:

* online: per sample, ``w += alpha * h * (x - w)`` over the whole grid;
* batch:  per epoch, each neuron moves to the kernel-weighted mean of the
  samples, with BMUs taken against the epoch-start codebook.

BMU selection on large inputs ranks neurons with the expanded score
``|w|^2 - 2 x.w`` (einsum, no BLAS threading) and then recomputes the
reported distances exactly on the selected neurons, so quantization error
agrees with the naive per-pair arithmetic to full precision.  Work is
split into fixed-size sample chunks; the ``threads`` argument only decides
how many workers process those chunks, so results are bit-identical for
any thread count.
"""

from __future__ import annotations

import enum
import struct
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import (
    BoundsError,
    DomainError,
    ParameterError,
    ParseError,
    ShapeError,
    VersionError,
)
from .grid import Coord, GridTopology, Topology, planar_positions, ring_distances
from .kernels import (
    Kernel,
    Metric,
    Schedule,
    distances_from,
    kernel_value,
    lr_schedule,
    sigma_schedule,
)

_CHUNK = 2048  # samples per selection chunk; fixed so threading never changes math
_MAGIC = b"SOMKIT00"
_FORMAT_VERSION = 1
_HEADER = struct.Struct("<7I")

_TOPOLOGY_CODES = {Topology.RECTANGULAR: 0, Topology.HEXAGONAL: 1}
_METRIC_CODES = {
    Metric.COSINE: 0,
    Metric.EUCLIDEAN: 1,
    Metric.MANHATTAN: 2,
    Metric.CHEBYSHEV: 3,
}
_KERNEL_CODES = {
    Kernel.GAUSSIAN: 0,
    Kernel.MEXICAN_HAT: 1,
    Kernel.BUBBLE: 2,
    Kernel.TRIANGLE: 3,
}


class UpdateMode(str, enum.Enum):
    ONLINE = "online"
    BATCH = "batch"


class SomModel:
    """A trained or in-training map: grid topology plus codebook."""

    def __init__(
        self,
        topo: GridTopology,
        dim: int,
        weights: np.ndarray,
        metric: Metric = Metric.EUCLIDEAN,
        kernel: Kernel = Kernel.GAUSSIAN,
    ):
        if dim < 1:
            raise ParameterError(f"feature dimension must be >= 1, got {dim}")
        weights = np.array(weights, dtype=float)
        if weights.shape != (topo.n_neurons, dim):
            raise ShapeError(
                f"weights must have shape ({topo.n_neurons}, {dim}), got {weights.shape}"
            )
        if not np.all(np.isfinite(weights)):
            raise ParameterError("codebook weights must be finite")
        self.topo = topo
        self.dim = dim
        self.weights = weights
        self.metric = Metric(metric)
        self.kernel = Kernel(kernel)

    @property
    def rows(self) -> int:
        return self.topo.rows

    @property
    def cols(self) -> int:
        return self.topo.cols

    @property
    def n_neurons(self) -> int:
        return self.topo.n_neurons

    def copy(self) -> "SomModel":
        return SomModel(self.topo, self.dim, self.weights.copy(), self.metric, self.kernel)


@dataclass(frozen=True)
class BmuResult:
    """Best and second-best matching units for one sample."""

    coord: Coord
    distance: float
    second: Coord


@dataclass
class TrainConfig:
    """Knobs for :func:`fit`; defaults follow the batch training protocol."""

    epochs: int = 100
    lr0: float = 0.5
    sigma0: float | None = None  # None -> max(rows, cols) / 2
    lr_schedule: Schedule = Schedule.INVERSE
    sigma_schedule: Schedule = Schedule.INVERSE
    update_mode: UpdateMode = UpdateMode.BATCH
    seed: int = 0
    d_th: float = 1.0
    gamma: float | None = None  # None -> epochs / 100

    def __post_init__(self) -> None:
        self.lr_schedule = Schedule(self.lr_schedule)
        self.sigma_schedule = Schedule(self.sigma_schedule)
        self.update_mode = UpdateMode(self.update_mode)
        if self.epochs < 1:
            raise ParameterError(f"epochs must be >= 1, got {self.epochs}")
        if self.lr0 <= 0:
            raise ParameterError(f"lr0 must be > 0, got {self.lr0}")
        if self.sigma0 is not None and self.sigma0 < 1:
            raise ParameterError(f"sigma0 must be >= 1, got {self.sigma0}")
        if self.d_th < 0:
            raise ParameterError(f"d_th must be >= 0, got {self.d_th}")
        if self.gamma is not None and self.gamma <= 0:
            raise ParameterError(f"gamma must be > 0, got {self.gamma}")

    def resolved_sigma0(self, topo: GridTopology) -> float:
        if self.sigma0 is not None:
            return self.sigma0
        return max(topo.rows, topo.cols) / 2.0


@dataclass
class FitReport:
    """Per-epoch quality curves and wall-clock accounting for one fit."""

    qe_curve: np.ndarray
    te_curve: np.ndarray
    wall_seconds: float
    metrics_seconds: float = 0.0


def _check_data(x: np.ndarray, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != dim:
        raise ShapeError(f"expected data of shape (n, {dim}), got {x.shape}")
    if x.shape[0] == 0:
        raise ShapeError("expected at least one sample")
    if not np.all(np.isfinite(x)):
        bad = int(np.argwhere(~np.isfinite(x))[0][0])
        raise ParameterError(f"non-finite value in sample row {bad}")
    return x


def init_random(
    topo: GridTopology,
    dim: int,
    data: np.ndarray,
    seed: int,
    metric: Metric = Metric.EUCLIDEAN,
    kernel: Kernel = Kernel.GAUSSIAN,
) -> SomModel:
    """Draw each weight coordinate uniformly from that feature's data range."""
    data = _check_data(data, dim)
    rng = np.random.default_rng(seed)
    lo = data.min(axis=0)
    hi = data.max(axis=0)
    weights = rng.uniform(lo, hi, size=(topo.n_neurons, dim))
    return SomModel(topo, dim, weights, metric, kernel)


def init_pca(
    topo: GridTopology,
    dim: int,
    data: np.ndarray,
    metric: Metric = Metric.EUCLIDEAN,
    kernel: Kernel = Kernel.GAUSSIAN,
) -> SomModel:
    """Spread the codebook over the plane of the top two principal components.

    Rows span the first component, columns the second, each scaled by the
    component's standard deviation.  Data with zero variance falls back to
    :func:`init_random` (seed 0) with a warning.
    """
    data = _check_data(data, dim)
    n = data.shape[0]
    if n < 2 or dim < 2:
        raise ParameterError(
            f"PCA init needs at least 2 samples and 2 features, got {data.shape}"
        )
    mean = data.mean(axis=0)
    centered = data - mean
    if not np.any(centered):
        warnings.warn("PCA init fell back to random: data has zero variance")
        return init_random(topo, dim, data, seed=0, metric=metric, kernel=kernel)
    _, svals, vt = np.linalg.svd(centered, full_matrices=False)
    comps = vt[:2].copy()
    for i in range(2):
        peak = np.argmax(np.abs(comps[i]))
        if comps[i][peak] < 0:
            comps[i] = -comps[i]
    scales = svals[:2] / np.sqrt(n - 1)
    u = np.linspace(-1.0, 1.0, topo.rows) if topo.rows > 1 else np.zeros(1)
    v = np.linspace(-1.0, 1.0, topo.cols) if topo.cols > 1 else np.zeros(1)
    weights = (
        mean
        + np.multiply.outer(np.repeat(u, topo.cols), scales[0] * comps[0])
        + np.multiply.outer(np.tile(v, topo.rows), scales[1] * comps[1])
    )
    return SomModel(topo, dim, weights, metric, kernel)


def _selection_scores(metric: Metric, chunk: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Monotone stand-ins for distances from each chunk row to each neuron.

    Euclidean drops the |x|^2 term (constant per sample); cosine scores are
    the distances themselves.  Manhattan/Chebyshev are computed exactly in
    sub-blocks to bound memory.
    """
    if metric is Metric.EUCLIDEAN:
        w2 = np.einsum("mk,mk->m", weights, weights)
        return w2[None, :] - 2.0 * np.einsum("nk,mk->nm", chunk, weights)
    if metric is Metric.COSINE:
        nx = np.sqrt(np.einsum("nk,nk->n", chunk, chunk))
        nw = np.sqrt(np.einsum("mk,mk->m", weights, weights))
        if np.any(nx == 0.0) or np.any(nw == 0.0):
            raise DomainError("cosine distance undefined for zero vectors")
        u = chunk / nx[:, None]
        v = weights / nw[:, None]
        m, k = weights.shape
        block = max(1, (1 << 22) // (m * k))
        out = np.empty((chunk.shape[0], m))
        for s in range(0, chunk.shape[0], block):
            diff = u[s : s + block, None, :] - v[None, :, :]
            out[s : s + block] = 0.5 * np.einsum("bmk,bmk->bm", diff, diff)
        return np.minimum(2.0, out)
    # exact elementwise metrics; block over samples to cap the 3-D temp
    m, k = weights.shape
    block = max(1, (1 << 22) // (m * k))
    out = np.empty((chunk.shape[0], m))
    for s in range(0, chunk.shape[0], block):
        diff = np.abs(chunk[s : s + block, None, :] - weights[None, :, :])
        if metric is Metric.MANHATTAN:
            out[s : s + block] = diff.sum(axis=2)
        elif metric is Metric.CHEBYSHEV:
            out[s : s + block] = diff.max(axis=2)
        else:
            raise ParameterError(f"unknown metric {metric!r}")
    return out


def _select_chunk(
    metric: Metric,
    chunk: np.ndarray,
    weights: np.ndarray,
    want_second: bool,
    want_dist: bool,
) -> tuple[np.ndarray, np.ndarray | None, np.ndarray | None]:
    scores = _selection_scores(metric, chunk, weights)
    first = np.argmin(scores, axis=1)
    second = None
    if want_second:
        scores[np.arange(len(first)), first] = np.inf
        second = np.argmin(scores, axis=1)
    dist = None
    if want_dist:
        if metric is Metric.EUCLIDEAN:
            diff = chunk - weights[first]
            dist = np.sqrt(np.einsum("nk,nk->n", diff, diff))
        elif metric is Metric.COSINE:
            nx = np.sqrt(np.einsum("nk,nk->n", chunk, chunk))
            sel = weights[first]
            nw = np.sqrt(np.einsum("nk,nk->n", sel, sel))
            diff = chunk / nx[:, None] - sel / nw[:, None]
            dist = np.minimum(2.0, 0.5 * np.einsum("nk,nk->n", diff, diff))
        elif metric is Metric.MANHATTAN:
            dist = np.abs(chunk - weights[first]).sum(axis=1)
        else:
            dist = np.abs(chunk - weights[first]).max(axis=1)
    return first, second, dist


def _batch_select(
    metric: Metric,
    data: np.ndarray,
    weights: np.ndarray,
    threads: int = 1,
    want_second: bool = False,
    want_dist: bool = False,
) -> tuple[np.ndarray, np.ndarray | None, np.ndarray | None]:
    """BMU (and optional runner-up / exact distance) for every sample."""
    n = data.shape[0]
    first = np.empty(n, dtype=np.int64)
    second = np.empty(n, dtype=np.int64) if want_second else None
    dist = np.empty(n) if want_dist else None
    spans = [(s, min(s + _CHUNK, n)) for s in range(0, n, _CHUNK)]

    def work(span: tuple[int, int]) -> None:
        s, e = span
        f, sec, d = _select_chunk(metric, data[s:e], weights, want_second, want_dist)
        first[s:e] = f
        if sec is not None:
            second[s:e] = sec
        if d is not None:
            dist[s:e] = d

    if threads > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, spans))
    else:
        for span in spans:
            work(span)
    return first, second, dist


def find_bmu(model: SomModel, x: np.ndarray) -> BmuResult:
    """Best and second-best neuron for one sample, with the exact distance.

    Ties break toward the lower row-major flat index.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (model.dim,):
        raise ShapeError(f"expected a vector of length {model.dim}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ParameterError("non-finite value in sample")
    if model.n_neurons < 2:
        raise ParameterError("second-best unit undefined on a single-neuron grid")
    d = distances_from(model.metric, x, model.weights)
    i1 = int(np.argmin(d))
    best = float(d[i1])
    d[i1] = np.inf
    i2 = int(np.argmin(d))
    return BmuResult(model.topo.coord(i1), best, model.topo.coord(i2))


def online_epoch(
    model: SomModel,
    data: np.ndarray,
    alpha_t: float,
    sigma_t: float,
    rng: np.random.Generator | None = None,
) -> None:
    """One pass of per-sample updates, in place.

    ``rng`` shuffles the visit order; ``None`` keeps the data order (fit
    supplies a per-epoch generator derived from the run seed).
    """
    data = _check_data(data, model.dim)
    if not 0.0 <= alpha_t or not np.isfinite(alpha_t):
        raise ParameterError(f"alpha must be >= 0, got {alpha_t}")
    if sigma_t <= 0:
        raise ParameterError(f"sigma must be > 0, got {sigma_t}")
    order = np.arange(data.shape[0]) if rng is None else rng.permutation(data.shape[0])
    pos = planar_positions(model.topo)
    weights = model.weights
    for i in order:
        x = data[i]
        d = distances_from(model.metric, x, weights)
        b = int(np.argmin(d))
        off = pos - pos[b]
        h = kernel_value(model.kernel, np.sqrt(np.einsum("mj,mj->m", off, off)), sigma_t)
        weights += (alpha_t * h)[:, None] * (x - weights)


def batch_epoch(model: SomModel, data: np.ndarray, sigma_t: float, threads: int = 1) -> None:
    """One kernel-weighted mean update, in place.

    BMUs are taken against the epoch-start codebook; neurons that receive
    zero kernel mass keep their previous weights.
    """
    data = _check_data(data, model.dim)
    if sigma_t <= 0:
        raise ParameterError(f"sigma must be > 0, got {sigma_t}")
    bmu, _, _ = _batch_select(model.metric, data, model.weights, threads)
    uniq, inv = np.unique(bmu, return_inverse=True)
    counts = np.bincount(inv, minlength=len(uniq)).astype(float)
    sums = np.empty((len(uniq), model.dim))
    for j in range(model.dim):
        sums[:, j] = np.bincount(inv, weights=data[:, j], minlength=len(uniq))

    pos = planar_positions(model.topo)
    num = np.zeros_like(model.weights)
    den = np.zeros(model.n_neurons)
    for s in range(0, len(uniq), 1024):
        bpos = pos[uniq[s : s + 1024]]
        diff = bpos[:, None, :] - pos[None, :, :]
        h = kernel_value(model.kernel, np.sqrt(np.einsum("umj,umj->um", diff, diff)), sigma_t)
        num += np.einsum("um,uk->mk", h, sums[s : s + 1024])
        den += np.einsum("um,u->m", h, counts[s : s + 1024])
    touched = den != 0.0
    model.weights[touched] = num[touched] / den[touched, None]


def evaluate(
    model: SomModel, data: np.ndarray, d_th: float = 1.0, threads: int = 1
) -> tuple[float, float]:
    """Quantization error and topographic error in one selection pass."""
    data = _check_data(data, model.dim)
    if model.n_neurons < 2:
        raise ParameterError("topographic error undefined on a single-neuron grid")
    first, second, dist = _batch_select(
        model.metric, data, model.weights, threads, want_second=True, want_dist=True
    )
    qe = float(np.mean(dist))
    te = float(np.mean(ring_distances(model.topo, first, second) > d_th))
    return qe, te


def quantization_error(model: SomModel, data: np.ndarray, threads: int = 1) -> float:
    """Mean distance from each sample to its BMU."""
    data = _check_data(data, model.dim)
    _, _, dist = _batch_select(model.metric, data, model.weights, threads, want_dist=True)
    return float(np.mean(dist))


def topographic_error(
    model: SomModel, data: np.ndarray, d_th: float = 1.0, threads: int = 1
) -> float:
    """Fraction of samples whose two best units are farther than ``d_th`` rings apart."""
    data = _check_data(data, model.dim)
    if model.n_neurons < 2:
        raise ParameterError("topographic error undefined on a single-neuron grid")
    first, second, _ = _batch_select(
        model.metric, data, model.weights, threads, want_second=True
    )
    return float(np.mean(ring_distances(model.topo, first, second) > d_th))


def predict_bmus(model: SomModel, data: np.ndarray, threads: int = 1) -> list[Coord]:
    """BMU coordinate for every sample (same tie-breaking as find_bmu)."""
    data = _check_data(data, model.dim)
    first, _, _ = _batch_select(model.metric, data, model.weights, threads)
    rows, cols = np.divmod(first, model.cols)
    return [(int(r), int(c)) for r, c in zip(rows, cols)]


def fit(model: SomModel, data: np.ndarray, cfg: TrainConfig, threads: int = 1) -> FitReport:
    """Train in place for ``cfg.epochs`` epochs and record QE/TE after each.

    Schedules advance once per epoch; epoch ``t`` uses the values at step
    ``t`` of the replayed recurrences.
    """
    data = _check_data(data, model.dim)
    if model.n_neurons < 2:
        raise ParameterError("training needs a grid of at least two neurons")
    sigma0 = cfg.resolved_sigma0(model.topo)
    if sigma0 < 1:
        raise ParameterError(f"sigma0 must be >= 1, got {sigma0}")
    alphas = lr_schedule(cfg.lr_schedule, cfg.lr0, cfg.epochs, cfg.gamma)
    sigmas = sigma_schedule(cfg.sigma_schedule, sigma0, cfg.epochs)

    qe_curve = np.empty(cfg.epochs)
    te_curve = np.empty(cfg.epochs)
    metrics_acc = 0.0
    start = time.perf_counter()
    for t in range(cfg.epochs):
        if cfg.update_mode is UpdateMode.ONLINE:
            rng = np.random.default_rng(
                np.random.SeedSequence(entropy=cfg.seed, spawn_key=(t,))
            )
            online_epoch(model, data, float(alphas[t]), float(sigmas[t]), rng)
        else:
            batch_epoch(model, data, float(sigmas[t]), threads)
        m0 = time.perf_counter()
        qe_curve[t], te_curve[t] = evaluate(model, data, cfg.d_th, threads)
        metrics_acc += time.perf_counter() - m0
    wall = time.perf_counter() - start
    return FitReport(qe_curve, te_curve, wall, metrics_acc)


def save(model: SomModel, path: str) -> None:
    """Write the binary model file (magic, uint32 header, float64 weights)."""
    header = _HEADER.pack(
        _FORMAT_VERSION,
        _TOPOLOGY_CODES[model.topo.kind],
        model.rows,
        model.cols,
        model.dim,
        _METRIC_CODES[model.metric],
        _KERNEL_CODES[model.kernel],
    )
    payload = np.ascontiguousarray(model.weights, dtype="<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(header)
        fh.write(payload)


def load(path: str) -> SomModel:
    """Read a model file written by :func:`save`; errors cite byte offsets."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(_MAGIC) or blob[: len(_MAGIC)] != _MAGIC:
        raise ParseError(f"{path}: bad magic at byte 0, not a model file", offset=0)
    head_end = len(_MAGIC) + _HEADER.size
    if len(blob) < head_end:
        raise ParseError(
            f"{path}: truncated header at byte {len(blob)}", offset=len(blob)
        )
    version, kind, rows, cols, dim, metric, kernel = _HEADER.unpack(
        blob[len(_MAGIC) : head_end]
    )
    if version != _FORMAT_VERSION:
        raise VersionError(version, _FORMAT_VERSION)
    topo_by_code = {v: k for k, v in _TOPOLOGY_CODES.items()}
    metric_by_code = {v: k for k, v in _METRIC_CODES.items()}
    kernel_by_code = {v: k for k, v in _KERNEL_CODES.items()}
    if kind not in topo_by_code:
        raise ParseError(f"{path}: unknown topology code {kind} at byte 12", offset=12)
    if rows < 1 or cols < 1 or dim < 1:
        raise ParseError(
            f"{path}: bad dimensions {rows}x{cols}x{dim} in header at byte 16", offset=16
        )
    if metric not in metric_by_code:
        raise ParseError(f"{path}: unknown metric code {metric} at byte 28", offset=28)
    if kernel not in kernel_by_code:
        raise ParseError(f"{path}: unknown kernel code {kernel} at byte 32", offset=32)
    expected = rows * cols * dim * 8
    if len(blob) - head_end != expected:
        raise ParseError(
            f"{path}: weight payload is {len(blob) - head_end} bytes at byte "
            f"{head_end}, expected {expected}",
            offset=head_end,
        )
    weights = np.frombuffer(blob, dtype="<f8", offset=head_end).reshape(rows * cols, dim)
    try:
        topo = GridTopology(topo_by_code[kind], rows, cols)
        return SomModel(
            topo, dim, weights.copy(), metric_by_code[metric], kernel_by_code[kernel]
        )
    except (ParameterError, ShapeError, BoundsError) as exc:
        raise ParseError(f"{path}: invalid model contents: {exc}") from exc
