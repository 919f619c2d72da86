"""Neighborhood kernels, feature-space distances, and decay schedules.

All kernels take a grid distance ``d >= 0`` and a width ``sigma > 0`` and
return the neighborhood weight used by the training updates:

* Gaussian:     exp(-d^2 / (2 sigma^2))
* Mexican hat:  (1 / (pi sigma^4)) (1 - d^2 / (2 sigma^2)) exp(-d^2 / (2 sigma^2))
* Bubble:       1 if d <= sigma else 0
* Triangle:     max(0, 1 - d / sigma)

Schedules are recurrences advanced once per epoch; ``*_step`` computes the
value at ``t + 1`` from the value at ``t`` and ``*_schedule`` replays a
whole run from the initial value.
"""

from __future__ import annotations

import enum
import math

import numpy as np

from .errors import DomainError, ParameterError, ShapeError


class Kernel(str, enum.Enum):
    GAUSSIAN = "gaussian"
    MEXICAN_HAT = "mexican_hat"
    BUBBLE = "bubble"
    TRIANGLE = "triangle"


class Metric(str, enum.Enum):
    COSINE = "cosine"
    EUCLIDEAN = "euclidean"
    MANHATTAN = "manhattan"
    CHEBYSHEV = "chebyshev"


class Schedule(str, enum.Enum):
    INVERSE = "inverse"
    LINEAR = "linear"


def kernel_value(kernel: Kernel, d, sigma: float):
    """Evaluate a neighborhood kernel at grid distance ``d`` (scalar or array)."""
    if sigma <= 0:
        raise ParameterError(f"kernel width must be > 0, got {sigma}")
    d = np.asarray(d, dtype=float)
    if np.any(d < 0):
        raise DomainError("grid distance must be >= 0")
    if kernel is Kernel.GAUSSIAN:
        out = np.exp(-(d * d) / (2.0 * sigma * sigma))
    elif kernel is Kernel.MEXICAN_HAT:
        u = (d * d) / (2.0 * sigma * sigma)
        out = (1.0 / (math.pi * sigma**4)) * (1.0 - u) * np.exp(-u)
    elif kernel is Kernel.BUBBLE:
        out = np.where(d <= sigma, 1.0, 0.0)
    elif kernel is Kernel.TRIANGLE:
        out = np.maximum(0.0, 1.0 - d / sigma)
    else:
        raise ParameterError(f"unknown kernel {kernel!r}")
    return float(out) if out.ndim == 0 else out


def feature_distance(metric: Metric, x, w) -> float:
    """Distance between two feature vectors under ``metric``."""
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    if x.ndim != 1 or w.ndim != 1 or x.shape != w.shape:
        raise ShapeError(
            f"feature vectors must be 1-D and equal length, got {x.shape} and {w.shape}"
        )
    if x.size == 0:
        raise ShapeError("feature vectors must have at least one entry")
    if metric is Metric.COSINE:
        nx = math.sqrt(float(x @ x))
        nw = math.sqrt(float(w @ w))
        if nx == 0.0 or nw == 0.0:
            raise DomainError("cosine distance undefined for zero vectors")
        # half squared chord between unit vectors equals 1 - cos but stays
        # exact (0.0) for parallel inputs and nonnegative by construction
        diff = x / nx - w / nw
        return min(2.0, 0.5 * float(np.einsum("k,k->", diff, diff)))
    if metric is Metric.EUCLIDEAN:
        diff = x - w
        return math.sqrt(float(diff @ diff))
    if metric is Metric.MANHATTAN:
        return float(np.abs(x - w).sum())
    if metric is Metric.CHEBYSHEV:
        return float(np.abs(x - w).max())
    raise ParameterError(f"unknown metric {metric!r}")


def distances_from(metric: Metric, x: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """Exact distances from one vector ``x`` to every row of ``rows``.

    This is the reference path: values match :func:`feature_distance`
    applied row by row (same elementwise arithmetic).
    """
    x = np.asarray(x, dtype=float)
    rows = np.asarray(rows, dtype=float)
    if x.ndim != 1 or rows.ndim != 2 or rows.shape[1] != x.shape[0]:
        raise ShapeError(
            f"expected x of shape (k,) and rows of shape (m, k), got {x.shape} and {rows.shape}"
        )
    if metric is Metric.COSINE:
        nx = math.sqrt(float(x @ x))
        nr = np.sqrt(np.einsum("mk,mk->m", rows, rows))
        if nx == 0.0 or np.any(nr == 0.0):
            raise DomainError("cosine distance undefined for zero vectors")
        d = rows / nr[:, None] - x / nx
        return np.minimum(2.0, 0.5 * np.einsum("mk,mk->m", d, d))
    diff = rows - x
    if metric is Metric.EUCLIDEAN:
        return np.sqrt(np.einsum("mk,mk->m", diff, diff))
    if metric is Metric.MANHATTAN:
        return np.abs(diff).sum(axis=1)
    if metric is Metric.CHEBYSHEV:
        return np.abs(diff).max(axis=1)
    raise ParameterError(f"unknown metric {metric!r}")


def _check_schedule_args(value: float, t: int, total: int) -> None:
    if total < 1:
        raise ParameterError(f"schedule length must be >= 1, got {total}")
    if t < 0:
        raise ParameterError(f"schedule step must be >= 0, got {t}")
    if not math.isfinite(value):
        raise ParameterError(f"schedule value must be finite, got {value}")


def lr_step(kind: Schedule, value: float, t: int, total: int, gamma: float | None = None) -> float:
    """Learning rate at ``t + 1`` given the rate ``value`` at ``t``."""
    _check_schedule_args(value, t, total)
    if kind is Schedule.INVERSE:
        g = total / 100.0 if gamma is None else gamma
        if g <= 0:
            raise ParameterError(f"gamma must be > 0, got {g}")
        return value * g / (g + t)
    if kind is Schedule.LINEAR:
        return value * (1.0 - t / total)
    raise ParameterError(f"unknown schedule {kind!r}")


def sigma_step(kind: Schedule, value: float, t: int, total: int) -> float:
    """Neighborhood width at ``t + 1`` given the width ``value`` at ``t``."""
    _check_schedule_args(value, t, total)
    if kind is Schedule.INVERSE:
        return value / (1.0 + t * (value - 1.0) / total)
    if kind is Schedule.LINEAR:
        return value + t * (1.0 - value) / total
    raise ParameterError(f"unknown schedule {kind!r}")


def asymptotic_step(value: float, t: int, total: int) -> float:
    """Generic asymptotic decay: value(t+1) = value(t) / (1 + t / (total / 2))."""
    _check_schedule_args(value, t, total)
    return value / (1.0 + t / (total / 2.0))


def lr_schedule(
    kind: Schedule, lr0: float, total: int, gamma: float | None = None
) -> np.ndarray:
    """Replay the learning-rate recurrence; returns values at t = 0 .. total-1."""
    if lr0 <= 0:
        raise ParameterError(f"initial learning rate must be > 0, got {lr0}")
    out = np.empty(total)
    value = lr0
    for t in range(total):
        out[t] = value
        value = lr_step(kind, value, t, total, gamma)
    return out


def sigma_schedule(kind: Schedule, sigma0: float, total: int) -> np.ndarray:
    """Replay the width recurrence; returns values at t = 0 .. total-1."""
    if sigma0 < 1:
        raise ParameterError(f"initial width must be >= 1, got {sigma0}")
    out = np.empty(total)
    value = sigma0
    for t in range(total):
        out[t] = value
        value = sigma_step(kind, value, t, total)
    return out
