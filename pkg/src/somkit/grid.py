"""Map grid topologies: coordinates, planar embeddings, and neighbor rings.

A grid is ``rows x cols`` neurons addressed by ``(row, col)`` or by a
row-major flat index.  Two distances live here:

* :func:`grid_distance` -- Euclidean distance between planar positions,
  used by neighborhood kernels during training.
* :func:`ring_distance` -- integer neighborhood order (Chebyshev distance
  on rectangular grids, hex distance on hexagonal ones), used by the
  topographic error and by sample collection.

Hexagonal grids use the odd-row offset layout: odd rows shift right by
half a cell and rows are sqrt(3)/2 apart, so all six neighbors of a cell
sit at planar distance exactly 1.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import BoundsError, ParameterError

Coord = tuple[int, int]

_ROW_PITCH = math.sqrt(3.0) / 2.0


class Topology(str, enum.Enum):
    RECTANGULAR = "rectangular"
    HEXAGONAL = "hexagonal"


@dataclass(frozen=True)
class GridTopology:
    """Shape and kind of a neuron grid."""

    kind: Topology
    rows: int
    cols: int

    def __post_init__(self) -> None:
        if not isinstance(self.kind, Topology):
            object.__setattr__(self, "kind", Topology(self.kind))
        if self.rows < 1 or self.cols < 1:
            raise ParameterError(
                f"grid must have at least one row and column, got "
                f"{self.rows}x{self.cols}"
            )

    @property
    def n_neurons(self) -> int:
        return self.rows * self.cols

    def check_bounds(self, coord: Coord) -> None:
        row, col = coord
        if not (0 <= row < self.rows and 0 <= col < self.cols):
            raise BoundsError(
                f"coordinate ({row}, {col}) outside {self.rows}x{self.cols} grid"
            )

    def flat_index(self, coord: Coord) -> int:
        self.check_bounds(coord)
        return coord[0] * self.cols + coord[1]

    def coord(self, flat: int) -> Coord:
        if not 0 <= flat < self.n_neurons:
            raise BoundsError(
                f"flat index {flat} outside grid of {self.n_neurons} neurons"
            )
        return divmod(flat, self.cols)


def planar_position(topo: GridTopology, coord: Coord) -> tuple[float, float]:
    """Return the (x, y) embedding of a grid coordinate."""
    topo.check_bounds(coord)
    row, col = coord
    if topo.kind is Topology.HEXAGONAL:
        return (col + 0.5 * (row % 2), row * _ROW_PITCH)
    return (float(col), float(row))


def planar_positions(topo: GridTopology) -> np.ndarray:
    """Planar positions of all neurons in row-major order, shape (M, 2)."""
    rows = np.repeat(np.arange(topo.rows), topo.cols)
    cols = np.tile(np.arange(topo.cols), topo.rows)
    if topo.kind is Topology.HEXAGONAL:
        x = cols + 0.5 * (rows % 2)
        y = rows * _ROW_PITCH
    else:
        x = cols.astype(float)
        y = rows.astype(float)
    return np.column_stack([x, y])


def grid_distance(topo: GridTopology, a: Coord, b: Coord) -> float:
    """Euclidean distance between the planar positions of two neurons."""
    ax, ay = planar_position(topo, a)
    bx, by = planar_position(topo, b)
    return math.hypot(ax - bx, ay - by)


def ring_distance(topo: GridTopology, a: Coord, b: Coord) -> int:
    """Neighborhood order between two neurons (0 iff a == b)."""
    topo.check_bounds(a)
    topo.check_bounds(b)
    if topo.kind is Topology.HEXAGONAL:
        # odd-row offset -> axial coordinates, then hex cube distance
        aq = a[1] - a[0] // 2
        bq = b[1] - b[0] // 2
        dq = aq - bq
        dr = a[0] - b[0]
        return (abs(dq) + abs(dq + dr) + abs(dr)) // 2
    return max(abs(a[0] - b[0]), abs(a[1] - b[1]))


def ring_distances(topo: GridTopology, a_flat: np.ndarray, b_flat: np.ndarray) -> np.ndarray:
    """Vectorized :func:`ring_distance` over flat indices."""
    a_flat = np.asarray(a_flat)
    b_flat = np.asarray(b_flat)
    ar, ac = np.divmod(a_flat, topo.cols)
    br, bc = np.divmod(b_flat, topo.cols)
    if topo.kind is Topology.HEXAGONAL:
        dq = (ac - ar // 2) - (bc - br // 2)
        dr = ar - br
        return (np.abs(dq) + np.abs(dq + dr) + np.abs(dr)) // 2
    return np.maximum(np.abs(ar - br), np.abs(ac - bc))


def neighbors_at_order(topo: GridTopology, center: Coord, order: int) -> list[Coord]:
    """In-bounds coordinates at ring distance exactly ``order``, row-major.

    The center itself is never included (its ring distance is 0).
    """
    topo.check_bounds(center)
    if order < 1:
        raise ParameterError(f"neighbor order must be >= 1, got {order}")
    r0, c0 = center
    # a cell at ring `order` is at most `order` rows away; on hex grids the
    # column offset can exceed `order` by one because of the row shift
    col_slack = order + 1 if topo.kind is Topology.HEXAGONAL else order
    out: list[Coord] = []
    for row in range(max(0, r0 - order), min(topo.rows, r0 + order + 1)):
        for col in range(max(0, c0 - col_slack), min(topo.cols, c0 + col_slack + 1)):
            if ring_distance(topo, center, (row, col)) == order:
                out.append((row, col))
    return out
