"""Codebook clustering: feature spaces, k-means, diagonal GMM, elbow, quality.

Neurons can be clustered by their weights, by their planar grid positions
(min-max normalized), or by both combined; the combined space z-scores each
weight feature and appends the normalized positions scaled by
``position_weight``.

Both algorithms are deterministic under a seed, expose their objective
history (inertia or total log-likelihood per iteration), and break ties
toward lower indices.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, ShapeError
from .grid import planar_positions
from .som import SomModel


class ClusterSpaceKind(str, enum.Enum):
    WEIGHTS = "weights"
    POSITIONS = "positions"
    COMBINED = "combined"


class ClusterAlgorithm(str, enum.Enum):
    KMEANS = "kmeans"
    GMM = "gmm"


@dataclass(frozen=True)
class ClusterSpace:
    """What to cluster neurons by; ``position_weight`` only matters for combined."""

    kind: ClusterSpaceKind
    position_weight: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", ClusterSpaceKind(self.kind))
        if self.position_weight <= 0:
            raise ParameterError(
                f"position weight must be > 0, got {self.position_weight}"
            )


@dataclass
class ClusterResult:
    """Cluster ids per row plus the algorithm's objective and its history."""

    assignment: np.ndarray
    k: int
    objective: float
    objective_name: str  # "inertia" or "log_likelihood"
    history: list[float] = field(default_factory=list)
    centroids: np.ndarray | None = None
    space: ClusterSpace | None = None


@dataclass
class ElbowResult:
    selected_k: int
    ks: list[int]
    inertias: list[float]


@dataclass
class ClusterQuality:
    silhouette: float
    davies_bouldin: float
    calinski_harabasz: float


@dataclass
class ComparisonRow:
    space: str
    algorithm: str
    k: int
    objective: float
    objective_name: str
    silhouette: float
    davies_bouldin: float
    calinski_harabasz: float


def _normalized_positions(model: SomModel) -> np.ndarray:
    pos = planar_positions(model.topo)
    lo = pos.min(axis=0)
    span = pos.max(axis=0) - lo
    span = np.where(span == 0.0, 1.0, span)
    return (pos - lo) / span


def cluster_features(model: SomModel, space: ClusterSpace) -> np.ndarray:
    """Feature rows (one per neuron) for the requested cluster space."""
    if space.kind is ClusterSpaceKind.WEIGHTS:
        return model.weights.copy()
    if space.kind is ClusterSpaceKind.POSITIONS:
        return _normalized_positions(model)
    std = model.weights.std(axis=0)
    std = np.where(std == 0.0, 1.0, std)
    scaled = (model.weights - model.weights.mean(axis=0)) / std
    return np.hstack([scaled, space.position_weight * _normalized_positions(model)])


def _check_features(features: np.ndarray, k: int) -> np.ndarray:
    features = np.asarray(features, dtype=float)
    if features.ndim != 2 or features.shape[0] < 1:
        raise ShapeError(f"expected a 2-D feature array, got shape {features.shape}")
    if not np.all(np.isfinite(features)):
        raise ParameterError("non-finite value in cluster features")
    if not 1 <= k <= features.shape[0]:
        raise ParameterError(
            f"k must be in 1..{features.shape[0]} (number of rows), got {k}"
        )
    return features


def _sq_dists(x: np.ndarray, centers: np.ndarray) -> np.ndarray:
    x2 = np.einsum("nk,nk->n", x, x)
    c2 = np.einsum("mk,mk->m", centers, centers)
    d2 = x2[:, None] + c2[None, :] - 2.0 * np.einsum("nk,mk->nm", x, centers)
    return np.maximum(d2, 0.0)


def _plusplus_seed(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    centers = np.empty((k, x.shape[1]))
    centers[0] = x[rng.integers(n)]
    d2 = _sq_dists(x, centers[:1])[:, 0]
    for i in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = rng.choice(n, p=d2 / total)
        else:
            idx = rng.integers(n)
        centers[i] = x[idx]
        d2 = np.minimum(d2, _sq_dists(x, centers[i : i + 1])[:, 0])
    return centers


def _assign_points(
    x: np.ndarray, centers: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Nearest-center assignment, reseeding empty clusters at the farthest point."""
    k = centers.shape[0]
    for _ in range(2 * k + 1):
        d2 = _sq_dists(x, centers)
        labels = np.argmin(d2, axis=1)
        counts = np.bincount(labels, minlength=k)
        empties = np.flatnonzero(counts == 0)
        if empties.size == 0:
            return labels, d2[np.arange(len(labels)), labels], centers
        nearest = d2[np.arange(len(labels)), labels]
        centers = centers.copy()
        centers[empties[0]] = x[int(np.argmax(nearest))]
    return labels, d2[np.arange(len(labels)), labels], centers


def _lloyd(
    x: np.ndarray,
    centers: np.ndarray,
    max_iter: int,
    tol: float,
) -> tuple[np.ndarray, np.ndarray, float, list[float]]:
    history: list[float] = []
    labels = np.zeros(len(x), dtype=np.int64)
    for _ in range(max_iter):
        labels, _, centers = _assign_points(x, centers)
        new_centers = np.empty_like(centers)
        counts = np.bincount(labels, minlength=centers.shape[0]).astype(float)
        for j in range(x.shape[1]):
            new_centers[:, j] = np.bincount(
                labels, weights=x[:, j], minlength=centers.shape[0]
            )
        new_centers /= counts[:, None]
        shift = float(np.max(np.abs(new_centers - centers)))
        centers = new_centers
        history.append(float(_sq_dists(x, centers)[np.arange(len(x)), labels].sum()))
        if shift <= tol:
            break
    labels, dmin, centers = _assign_points(x, centers)
    inertia = float(dmin.sum())
    history.append(inertia)
    return labels, centers, inertia, history


def kmeans(
    features: np.ndarray,
    k: int,
    seed: int,
    max_iter: int = 300,
    tol: float = 1e-6,
) -> ClusterResult:
    """Lloyd's algorithm with k-means++ seeding; fully deterministic per seed."""
    x = _check_features(features, k)
    rng = np.random.default_rng(seed)
    centers = _plusplus_seed(x, k, rng)
    labels, centers, inertia, history = _lloyd(x, centers, max_iter, tol)
    return ClusterResult(labels, k, inertia, "inertia", history, centers)


def _gmm_log_prob(
    x: np.ndarray, means: np.ndarray, variances: np.ndarray, log_pi: np.ndarray
) -> np.ndarray:
    # log N(x | mu_c, diag var_c) + log pi_c, shape (n, k)
    n, d = x.shape
    out = np.empty((n, means.shape[0]))
    for c in range(means.shape[0]):
        diff2 = (x - means[c]) ** 2
        out[:, c] = (
            -0.5 * (d * math.log(2.0 * math.pi) + np.log(variances[c]).sum())
            - 0.5 * (diff2 / variances[c]).sum(axis=1)
            + log_pi[c]
        )
    return out


def _logsumexp_rows(a: np.ndarray) -> np.ndarray:
    peak = a.max(axis=1, keepdims=True)
    return (peak + np.log(np.exp(a - peak).sum(axis=1, keepdims=True)))[:, 0]


def gmm(
    features: np.ndarray,
    k: int,
    seed: int,
    max_iter: int = 200,
    tol: float = 1e-6,
    reg: float = 1e-6,
) -> ClusterResult:
    """EM for a diagonal-covariance Gaussian mixture, initialized from k-means.

    Variances are floored at ``reg``, which keeps every M-step inside the
    feasible set and so preserves the EM monotonicity guarantee.
    """
    x = _check_features(features, k)
    if tol <= 0 or reg <= 0:
        raise ParameterError("tol and reg must be > 0")
    km = kmeans(x, k, seed)
    means = km.centroids.copy()
    variances = np.empty_like(means)
    weights = np.empty(k)
    for c in range(k):
        members = x[km.assignment == c]
        weights[c] = len(members) / len(x)
        variances[c] = np.maximum(members.var(axis=0), reg)
    history: list[float] = []
    resp = None
    for _ in range(max_iter):
        log_joint = _gmm_log_prob(x, means, variances, np.log(weights))
        log_norm = _logsumexp_rows(log_joint)
        ll = float(log_norm.sum())
        resp = np.exp(log_joint - log_norm[:, None])
        if history and ll - history[-1] < tol:
            history.append(ll)
            break
        history.append(ll)
        mass = resp.sum(axis=0)
        safe = np.maximum(mass, np.finfo(float).tiny)
        weights = mass / len(x)
        means = (resp.T @ x) / safe[:, None]
        second = (resp.T @ (x * x)) / safe[:, None]
        variances = np.maximum(second - means * means, reg)
    assignment = np.argmax(resp, axis=1)
    return ClusterResult(assignment, k, history[-1], "log_likelihood", history, means)


def elbow(features: np.ndarray, ks, seed: int) -> ElbowResult:
    """Pick k by the largest second difference of a warm-started inertia curve.

    inertia(k+1) starts from inertia(k)'s centroids plus the point farthest
    from its nearest centroid, so the curve is non-increasing by construction.
    """
    ks = [int(k) for k in ks]
    if len(ks) < 3:
        raise ParameterError(f"elbow needs at least 3 candidate ks, got {ks}")
    if sorted(set(ks)) != ks:
        raise ParameterError(f"candidate ks must be strictly increasing, got {ks}")
    x = _check_features(features, ks[-1])
    inertias: list[float] = []
    centers = None
    for k in ks:
        if centers is None:
            res = kmeans(x, k, seed)
            labels, centers, inertia = res.assignment, res.centroids, res.objective
        else:
            centers = centers.copy()
            while centers.shape[0] < k:
                d2 = _sq_dists(x, centers)
                nearest = d2[np.arange(len(x)), np.argmin(d2, axis=1)]
                centers = np.vstack([centers, x[int(np.argmax(nearest))]])
            _, centers, inertia, _ = _lloyd(x, centers, 300, 1e-6)
        inertias.append(inertia)
    curvature = [
        inertias[i - 1] - 2.0 * inertias[i] + inertias[i + 1]
        for i in range(1, len(ks) - 1)
    ]
    best = int(np.argmax(curvature)) + 1
    return ElbowResult(ks[best], ks, inertias)


def quality(features: np.ndarray, assignment: np.ndarray) -> ClusterQuality:
    """Silhouette, Davies-Bouldin, and Calinski-Harabasz for a partition.

    Conventions: singleton clusters get silhouette 0; Calinski-Harabasz is
    1.0 when within-cluster dispersion is exactly 0.
    """
    x = np.asarray(features, dtype=float)
    labels = np.asarray(assignment)
    if labels.shape != (x.shape[0],):
        raise ShapeError("assignment length must match the number of rows")
    uniq = np.unique(labels)
    k = len(uniq)
    if k < 2:
        raise ParameterError("quality metrics need at least 2 clusters")
    dense = np.searchsorted(uniq, labels)
    counts = np.bincount(dense, minlength=k).astype(float)
    onehot = np.zeros((x.shape[0], k))
    onehot[np.arange(x.shape[0]), dense] = 1.0

    # silhouette, chunked over rows
    s_sum = 0.0
    for s in range(0, x.shape[0], 1024):
        d = np.sqrt(_sq_dists(x[s : s + 1024], x))
        sums = d @ onehot
        own = dense[s : s + 1024]
        rows = np.arange(len(own))
        a = np.where(counts[own] > 1, sums[rows, own] / np.maximum(counts[own] - 1, 1), 0.0)
        other = sums / counts[None, :]
        other[rows, own] = np.inf
        b = other.min(axis=1)
        denom = np.maximum(a, b)
        sil = np.where((counts[own] > 1) & (denom > 0), (b - a) / np.where(denom == 0, 1, denom), 0.0)
        s_sum += float(sil.sum())
    silhouette = s_sum / x.shape[0]

    centroids = (onehot.T @ x) / counts[:, None]
    spreads = np.empty(k)
    for c in range(k):
        member = x[dense == c]
        spreads[c] = float(np.mean(np.sqrt(((member - centroids[c]) ** 2).sum(axis=1))))
    cdist = np.sqrt(_sq_dists(centroids, centroids))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = (spreads[:, None] + spreads[None, :]) / cdist
    np.fill_diagonal(ratio, -np.inf)
    davies_bouldin = float(np.mean(ratio.max(axis=1)))

    mean_all = x.mean(axis=0)
    intra = float(((x - centroids[dense]) ** 2).sum())
    extra = float((counts * ((centroids - mean_all) ** 2).sum(axis=1)).sum())
    n = x.shape[0]
    if intra == 0.0:
        calinski = 1.0
    else:
        calinski = extra * (n - k) / (intra * (k - 1))
    return ClusterQuality(silhouette, davies_bouldin, float(calinski))


def compare(
    model: SomModel,
    k: int,
    seed: int,
    spaces: tuple[ClusterSpace, ...] | None = None,
    algorithms: tuple[ClusterAlgorithm, ...] = (
        ClusterAlgorithm.KMEANS,
        ClusterAlgorithm.GMM,
    ),
) -> list[ComparisonRow]:
    """Cluster the codebook in every (space, algorithm) pair and score each."""
    if spaces is None:
        spaces = (
            ClusterSpace(ClusterSpaceKind.WEIGHTS),
            ClusterSpace(ClusterSpaceKind.POSITIONS),
            ClusterSpace(ClusterSpaceKind.COMBINED),
        )
    rows: list[ComparisonRow] = []
    for space in spaces:
        feats = cluster_features(model, space)
        for algo in algorithms:
            algo = ClusterAlgorithm(algo)
            if algo is ClusterAlgorithm.KMEANS:
                res = kmeans(feats, k, seed)
            else:
                res = gmm(feats, k, seed)
            res.space = space
            q = quality(feats, res.assignment)
            rows.append(
                ComparisonRow(
                    space.kind.value,
                    algo.value,
                    k,
                    res.objective,
                    res.objective_name,
                    q.silhouette,
                    q.davies_bouldin,
                    q.calinski_harabasz,
                )
            )
    return rows


def comparison_to_csv(rows: list[ComparisonRow]) -> str:
    out = ["space,algorithm,k,objective,objective_name,silhouette,davies_bouldin,calinski_harabasz"]
    for r in rows:
        out.append(
            f"{r.space},{r.algorithm},{r.k},{r.objective!r},{r.objective_name},"
            f"{r.silhouette!r},{r.davies_bouldin!r},{r.calinski_harabasz!r}"
        )
    return "\n".join(out) + "\n"
