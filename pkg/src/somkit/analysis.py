"""Map analyses: neuron/sample assignment, 2-D map layers, sample collection.

Every analysis produces a :class:`MapLayer`, a ``(rows, cols)`` float array
where ``NaN`` marks cells with no defined value (for example neurons that
captured no samples).  Layers serialize to a ``row,col,value`` CSV with an
empty value field for absent cells.
"""

from __future__ import annotations

import io
import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import BoundsError, ParameterError, ShapeError
from .grid import Coord, GridTopology, neighbors_at_order
from .kernels import distances_from, feature_distance
from .som import SomModel, _check_data, find_bmu, predict_bmus


@dataclass
class MapLayer:
    """One scalar per grid cell; NaN means the cell has no value."""

    topo: GridTopology
    values: np.ndarray
    label: str

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.topo.rows, self.topo.cols):
            raise ShapeError(
                f"layer must have shape ({self.topo.rows}, {self.topo.cols}), "
                f"got {self.values.shape}"
            )

    @property
    def present(self) -> np.ndarray:
        return ~np.isnan(self.values)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("row,col,value\n")
        for r in range(self.topo.rows):
            for c in range(self.topo.cols):
                v = self.values[r, c]
                buf.write(f"{r},{c},{'' if math.isnan(v) else repr(float(v))}\n")
        return buf.getvalue()


@dataclass
class NeuronBuffer:
    """Sample indices captured by each neuron, in ascending sample order."""

    topo: GridTopology
    indices: list[np.ndarray]

    def __post_init__(self) -> None:
        if len(self.indices) != self.topo.n_neurons:
            raise ShapeError(
                f"buffer needs one entry per neuron ({self.topo.n_neurons}), "
                f"got {len(self.indices)}"
            )

    def counts(self) -> np.ndarray:
        return np.array([len(ix) for ix in self.indices], dtype=np.int64)

    def at(self, coord: Coord) -> np.ndarray:
        return self.indices[self.topo.flat_index(coord)]


@dataclass
class CollectResult:
    """Ordered training samples gathered around a query's BMU."""

    indices: list[int]
    distances: list[float]
    orders_used: int
    shortfall: bool


def assign(model: SomModel, data: np.ndarray, threads: int = 1) -> NeuronBuffer:
    """Group sample indices by BMU."""
    data = _check_data(data, model.dim)
    coords = predict_bmus(model, data, threads)
    flats = np.array([r * model.cols + c for r, c in coords])
    order = np.argsort(flats, kind="stable")
    sorted_flats = flats[order]
    buckets: list[np.ndarray] = []
    bounds = np.searchsorted(sorted_flats, np.arange(model.n_neurons + 1))
    for i in range(model.n_neurons):
        buckets.append(np.sort(order[bounds[i] : bounds[i + 1]]))
    return NeuronBuffer(model.topo, buckets)


def u_matrix(model: SomModel) -> MapLayer:
    """Mean codebook distance from each neuron to its ring-1 neighbors."""
    vals = np.zeros((model.rows, model.cols))
    for r in range(model.rows):
        for c in range(model.cols):
            if model.n_neurons == 1:
                vals[r, c] = 0.0
                continue
            neigh = neighbors_at_order(model.topo, (r, c), 1)
            rows = model.weights[[model.topo.flat_index(n) for n in neigh]]
            w = model.weights[model.topo.flat_index((r, c))]
            vals[r, c] = float(np.mean(distances_from(model.metric, w, rows)))
    return MapLayer(model.topo, vals, "umatrix")


def hit_map(buffer: NeuronBuffer) -> MapLayer:
    """Sample count per neuron; zeros are real values, never absent."""
    counts = buffer.counts().astype(float)
    return MapLayer(buffer.topo, counts.reshape(buffer.topo.rows, buffer.topo.cols), "hit")


def component_plane(model: SomModel, feature: int) -> MapLayer:
    """One codebook coordinate over the grid."""
    if not 0 <= feature < model.dim:
        raise BoundsError(f"feature index {feature} outside 0..{model.dim - 1}")
    vals = model.weights[:, feature].reshape(model.rows, model.cols)
    return MapLayer(model.topo, vals.copy(), f"component{feature}")


def _per_neuron_targets(
    buffer: NeuronBuffer, values: np.ndarray
) -> list[np.ndarray]:
    values = np.asarray(values, dtype=float)
    if values.ndim != 1:
        raise ShapeError(f"per-sample values must be 1-D, got shape {values.shape}")
    out = []
    for ix in buffer.indices:
        if len(ix) and ix.max() >= len(values):
            raise BoundsError(
                f"buffer refers to sample {int(ix.max())}, only {len(values)} values given"
            )
        out.append(values[ix])
    return out


def metric_map(buffer: NeuronBuffer, values: np.ndarray, stat: str = "mean") -> MapLayer:
    """Mean or population std of a per-sample value over each neuron's samples.

    Empty neurons are absent; a single sample gives std 0.
    """
    if stat not in ("mean", "std"):
        raise ParameterError(f"stat must be 'mean' or 'std', got {stat!r}")
    grouped = _per_neuron_targets(buffer, values)
    vals = np.full(buffer.topo.n_neurons, np.nan)
    for i, g in enumerate(grouped):
        if len(g) == 0:
            continue
        vals[i] = float(np.mean(g)) if stat == "mean" else float(np.std(g))
    return MapLayer(
        buffer.topo, vals.reshape(buffer.topo.rows, buffer.topo.cols), f"metric_{stat}"
    )


def score_map(buffer: NeuronBuffer, values: np.ndarray) -> MapLayer:
    """Spread-vs-support score per neuron.

    ``S = (std / sqrt(n)) * ln(N / n)`` with population std, sample count n,
    and total sample count N; empty neurons are absent.  The score is 0 both
    for zero spread and for a neuron holding every sample.
    """
    grouped = _per_neuron_targets(buffer, values)
    total = int(sum(len(g) for g in grouped))
    vals = np.full(buffer.topo.n_neurons, np.nan)
    for i, g in enumerate(grouped):
        n = len(g)
        if n == 0:
            continue
        vals[i] = float(np.std(g)) / math.sqrt(n) * math.log(total / n)
    return MapLayer(buffer.topo, vals.reshape(buffer.topo.rows, buffer.topo.cols), "score")


def rank_map(layer: MapLayer) -> MapLayer:
    """Competition ranks of present cells, ascending (rank 1 = smallest).

    Equal values share a rank: 1 + the count of strictly smaller values.
    Absent cells stay absent.
    """
    flat = layer.values.ravel()
    present = ~np.isnan(flat)
    vals = flat[present]
    ranks = np.full(flat.shape, np.nan)
    if vals.size:
        order = np.sort(vals)
        ranks[present] = np.searchsorted(order, vals, side="left") + 1
    return MapLayer(
        layer.topo, ranks.reshape(layer.values.shape), f"rank_{layer.label}"
    )


def classification_map(buffer: NeuronBuffer, labels: np.ndarray) -> MapLayer:
    """Most frequent label per neuron; ties pick the smallest label id."""
    labels = np.asarray(labels)
    if labels.ndim != 1:
        raise ShapeError(f"labels must be 1-D, got shape {labels.shape}")
    vals = np.full(buffer.topo.n_neurons, np.nan)
    for i, ix in enumerate(buffer.indices):
        if len(ix) == 0:
            continue
        if len(ix) and ix.max() >= len(labels):
            raise BoundsError(
                f"buffer refers to sample {int(ix.max())}, only {len(labels)} labels given"
            )
        counts = Counter(int(v) for v in labels[ix])
        top = max(counts.values())
        vals[i] = min(lab for lab, cnt in counts.items() if cnt == top)
    return MapLayer(
        buffer.topo, vals.reshape(buffer.topo.rows, buffer.topo.cols), "classification"
    )


def collect_sample(
    model: SomModel,
    buffer: NeuronBuffer,
    data: np.ndarray,
    query: np.ndarray,
    min_samples: int,
    max_order: int = 3,
) -> CollectResult:
    """Gather training samples from rings around the query's BMU.

    Rings 0, 1, ... are added whole until the cumulative count reaches
    ``min_samples`` or ``max_order`` is exhausted (then ``shortfall`` is
    set).  The result is sorted by feature distance to the query, ties by
    sample index.
    """
    if min_samples < 1:
        raise ParameterError(f"min_samples must be >= 1, got {min_samples}")
    if max_order < 0:
        raise ParameterError(f"max_order must be >= 0, got {max_order}")
    data = _check_data(data, model.dim)
    bmu = find_bmu(model, query).coord
    picked: list[int] = []
    orders_used = 0
    for order in range(max_order + 1):
        ring = [bmu] if order == 0 else neighbors_at_order(model.topo, bmu, order)
        for coord in ring:
            picked.extend(int(i) for i in buffer.at(coord))
        orders_used = order
        if len(picked) >= min_samples:
            break
    if picked:
        if max(picked) >= data.shape[0]:
            raise BoundsError(
                f"buffer refers to sample {max(picked)}, data has {data.shape[0]} rows"
            )
        dists = [feature_distance(model.metric, query, data[i]) for i in picked]
        order_ix = sorted(range(len(picked)), key=lambda j: (dists[j], picked[j]))
        picked = [picked[j] for j in order_ix]
        dists = [dists[j] for j in order_ix]
    else:
        dists = []
    return CollectResult(picked, dists, orders_used, len(picked) < min_samples)
