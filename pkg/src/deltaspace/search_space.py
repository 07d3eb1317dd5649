"""Pruned high-dimensional search spaces.

A search space decides which position cells a lattice state may occupy.
Three variants exist: the full map, a metric tunnel around one shortest
grid path, and a delta-space.
"""

from __future__ import annotations

import math
from enum import Enum

import numpy as np

from .grid_map import GridMap
from .lattice import LatticeState, MotionPrimitive
from .lowdim import EPS, DeltaSpace, extract_path

INFINITE = math.inf


class Membership(Enum):
    INSIDE = "inside"
    BOUNDARY = "boundary"
    OUTSIDE = "outside"


class SearchSpace:
    """Base class; subclasses provide :meth:`inside`."""

    kind = "base"
    grid: GridMap

    def inside(self, cell) -> bool:
        raise NotImplementedError

    def cells(self) -> set:
        return {c for c in self.grid.free_set() if self.inside(c)}

    @property
    def version(self):
        """Changes whenever membership may have grown."""
        return 0


class FullSpace(SearchSpace):
    kind = "full"

    def __init__(self, grid: GridMap):
        self.grid = grid
        self._free = grid.free_set()

    def inside(self, cell) -> bool:
        return cell in self._free


class TunnelSpace(SearchSpace):
    """Cells whose center lies within ``radius`` meters of the path polyline.

    ``ds`` optionally keeps the delta-space the path came from, so that
    distance-based heuristics can still read its backward search.
    """

    kind = "tunnel"

    def __init__(self, grid: GridMap, path, radius: float, ds: DeltaSpace = None):
        if radius < 0:
            raise ValueError("radius must be >= 0")
        self.grid = grid
        self.ds = ds
        self.path = [tuple(c) for c in path]
        self.radius = float(radius)
        self._cells = frozenset(_cells_near_polyline(grid, self.path, self.radius))

    def inside(self, cell) -> bool:
        return cell in self._cells

    def cells(self) -> set:
        return set(self._cells)


class DeltaSearchSpace(SearchSpace):
    """Live view on a :class:`DeltaSpace`; grows when the delta-space is extended."""

    kind = "delta"

    def __init__(self, ds: DeltaSpace):
        self.grid = ds.grid
        self.ds = ds

    def inside(self, cell) -> bool:
        return cell in self.ds.members

    def cells(self) -> set:
        return set(self.ds.members)

    @property
    def version(self):
        return (self.ds.delta, len(self.ds.members))


def _cells_near_polyline(grid: GridMap, path, radius: float) -> list:
    free = np.argwhere(~grid.occupancy)
    if len(free) == 0 or not path:
        return []
    centers = (free + 0.5) * grid.resolution
    pts = (np.asarray(path, dtype=float) + 0.5) * grid.resolution
    best = np.full(len(centers), np.inf)
    if len(pts) == 1:
        best = np.linalg.norm(centers - pts[0], axis=1)
    for a, b in zip(pts[:-1], pts[1:]):
        ab = b - a
        denom = float(ab @ ab)
        t = np.clip(((centers - a) @ ab) / denom, 0.0, 1.0) if denom > 0 else np.zeros(len(centers))
        d = np.linalg.norm(centers - (a + t[:, None] * ab), axis=1)
        best = np.minimum(best, d)
    keep = best <= radius + EPS
    return [tuple(int(i) for i in c) for c in free[keep]]


def full_space(grid: GridMap) -> FullSpace:
    return FullSpace(grid)


def delta_space(ds: DeltaSpace) -> DeltaSearchSpace:
    return DeltaSearchSpace(ds)


def tunnel_from_delta(ds: DeltaSpace, radius: float) -> TunnelSpace:
    """Tunnel of ``radius`` meters around the greedy shortest path of ``ds``."""
    return TunnelSpace(ds.grid, extract_path(ds), radius, ds)


def classify(space: SearchSpace, state: LatticeState, parent: LatticeState = None) -> Membership:
    """INSIDE if the state's cell is part of the space. A state outside the
    space is BOUNDARY when reached from an INSIDE ``parent``."""
    if space.inside(state.pos):
        return Membership.INSIDE
    if parent is not None and space.inside(parent.pos):
        return Membership.BOUNDARY
    return Membership.OUTSIDE


def edge_cost(space: SearchSpace, from_state: LatticeState, primitive: MotionPrimitive) -> float:
    """Primitive cost when both endpoints are inside, ``math.inf`` otherwise."""
    if primitive.start != from_state:
        raise ValueError("primitive does not start at from_state")
    if space.inside(from_state.pos) and space.inside(primitive.end.pos):
        return primitive.cost
    return INFINITE
