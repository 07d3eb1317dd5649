"""Occupancy grid world model.

Cells are addressed by integer index tuples ``(x, y)`` or ``(x, y, z)``.
The occupancy array is indexed the same way, i.e. ``occupancy[x, y]``.
"""

from __future__ import annotations

import io
import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Iterable

import numpy as np

Cell = tuple


class MapFormatError(ValueError):
    """Raised when a map file cannot be parsed."""


class CellState(Enum):
    FREE = 0
    OCCUPIED = 1
    OUT_OF_BOUNDS = 2


@lru_cache(maxsize=None)
def neighbor_offsets(ndim: int) -> tuple:
    """Offsets of the full 8/26-neighbourhood with the axis-aligned
    intermediate offsets that must be free for a diagonal move."""
    out = []
    for off in itertools.product((-1, 0, 1), repeat=ndim):
        if not any(off):
            continue
        changed = [i for i, o in enumerate(off) if o]
        inter = []
        # every proper non-empty subset of the changed axes
        for r in range(1, len(changed)):
            for sub in itertools.combinations(changed, r):
                inter.append(tuple(off[i] if i in sub else 0 for i in range(ndim)))
        out.append((off, math.sqrt(len(changed)), tuple(inter)))
    return tuple(out)


@dataclass(frozen=True, eq=False)
class GridMap:
    """Immutable 2D/3D occupancy grid with uniform metric resolution."""

    occupancy: np.ndarray
    resolution: float = 1.0
    origin: tuple = field(default=None)

    def __post_init__(self):
        occ = np.array(self.occupancy, dtype=bool)
        if occ.ndim not in (2, 3):
            raise ValueError(f"occupancy must be 2D or 3D, got {occ.ndim}D")
        if min(occ.shape) < 1:
            raise ValueError("all dims must be >= 1")
        if not self.resolution > 0:
            raise ValueError("resolution must be positive")
        occ.setflags(write=False)
        object.__setattr__(self, "occupancy", occ)
        origin = (0.0,) * occ.ndim if self.origin is None else tuple(float(o) for o in self.origin)
        if len(origin) != occ.ndim:
            raise ValueError("origin length must match map dimensionality")
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "resolution", float(self.resolution))

    @property
    def dims(self) -> tuple:
        return self.occupancy.shape

    @property
    def ndim(self) -> int:
        return self.occupancy.ndim

    @property
    def size(self) -> tuple:
        """Metric extent per axis."""
        return tuple(d * self.resolution for d in self.dims)

    @property
    def diagonal(self) -> float:
        return float(math.hypot(*self.size))

    def __eq__(self, other):
        if not isinstance(other, GridMap):
            return NotImplemented
        return (
            self.resolution == other.resolution
            and self.origin == other.origin
            and self.dims == other.dims
            and bool(np.array_equal(self.occupancy, other.occupancy))
        )

    __hash__ = object.__hash__

    def in_bounds(self, c) -> bool:
        return len(c) == self.ndim and all(0 <= i < d for i, d in zip(c, self.dims))

    def is_free(self, c) -> bool:
        return self.in_bounds(c) and not self.occupancy[tuple(c)]

    def cell_center(self, c) -> np.ndarray:
        return np.asarray(self.origin) + (np.asarray(c, dtype=float) + 0.5) * self.resolution

    def cell_of(self, point) -> tuple:
        """Index of the cell containing a metric point (may be out of bounds)."""
        rel = (np.asarray(point, dtype=float) - np.asarray(self.origin)) / self.resolution
        return tuple(int(v) for v in np.floor(rel))

    def free_cells(self) -> list:
        return [tuple(int(i) for i in c) for c in np.argwhere(~self.occupancy)]

    def free_set(self) -> frozenset:
        fs = self.__dict__.get("_free_set")
        if fs is None:
            fs = frozenset(self.free_cells())
            object.__setattr__(self, "_free_set", fs)
        return fs


def cell_state(grid: GridMap, c) -> CellState:
    if not grid.in_bounds(c):
        return CellState.OUT_OF_BOUNDS
    return CellState.OCCUPIED if grid.occupancy[tuple(c)] else CellState.FREE


def neighbors(grid: GridMap, c) -> list:
    """Free neighbours of ``c`` with their metric step cost.

    Diagonal moves are dropped when any axis-aligned intermediate cell is
    not free (no corner cutting).
    """
    free = grid.free_set()
    res = grid.resolution
    out = []
    for off, scale, inter in neighbor_offsets(grid.ndim):
        n = tuple(a + b for a, b in zip(c, off))
        if n not in free:
            continue
        if any(tuple(a + b for a, b in zip(c, o)) not in free for o in inter):
            continue
        out.append((n, res * scale))
    return out


def octile_distance(a, b, resolution: float = 1.0) -> float:
    """Shortest path length between two cells on an empty 8/26-connected grid."""
    d = sorted((abs(i - j) for i, j in zip(a, b)), reverse=True)
    if len(d) == 2:
        return resolution * ((d[0] - d[1]) + math.sqrt(2) * d[1])
    return resolution * ((d[0] - d[1]) + math.sqrt(2) * (d[1] - d[2]) + math.sqrt(3) * d[2])


def load_map(source) -> GridMap:
    """Read a map from a path or a text/binary stream."""
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source, "rb") as fh:
            text = fh.read()
    if isinstance(text, bytes):
        text = text.decode()
    return parse_map(text)


def parse_map(text: str) -> GridMap:
    """Parse the text map format::

        D
        nx ny [nz] resolution
        <ny rows of nx chars in {0,1}, row 0 = minimum y>
        [blank line, next z-slice ...]
    """
    lines = text.splitlines()
    if len(lines) < 2:
        raise MapFormatError("missing header")
    try:
        ndim = int(lines[0].strip())
    except ValueError as exc:
        raise MapFormatError(f"bad dimension line {lines[0]!r}") from exc
    if ndim not in (2, 3):
        raise MapFormatError(f"dimension must be 2 or 3, got {ndim}")
    header = lines[1].split()
    if len(header) != ndim + 1:
        raise MapFormatError(f"expected {ndim} dims and a resolution, got {lines[1]!r}")
    try:
        dims = [int(v) for v in header[:ndim]]
        resolution = float(header[ndim])
    except ValueError as exc:
        raise MapFormatError(f"bad header {lines[1]!r}") from exc
    if any(d < 1 for d in dims):
        raise MapFormatError("dims must be >= 1")
    if not resolution > 0:
        raise MapFormatError("resolution must be positive")

    body = lines[2:]
    while body and not body[-1].strip():
        body.pop()
    nz = dims[2] if ndim == 3 else 1
    slices, cur = [], []
    for ln in body:
        if not ln.strip():
            slices.append(cur)
            cur = []
        else:
            cur.append(ln.strip())
    slices.append(cur)
    if len(slices) != nz:
        raise MapFormatError(f"expected {nz} slice(s), got {len(slices)}")

    occ = np.zeros(dims, dtype=bool)
    for z, rows in enumerate(slices):
        if len(rows) != dims[1]:
            raise MapFormatError(f"slice {z}: expected {dims[1]} rows, got {len(rows)}")
        for y, row in enumerate(rows):
            if len(row) != dims[0] or set(row) - {"0", "1"}:
                raise MapFormatError(f"slice {z} row {y}: expected {dims[0]} chars from {{0,1}}")
            vals = np.frombuffer(row.encode(), dtype=np.uint8) == ord("1")
            if ndim == 2:
                occ[:, y] = vals
            else:
                occ[:, y, z] = vals
    return GridMap(occ, resolution)


def save_map(grid: GridMap, dest=None) -> str:
    """Serialize ``grid``; writes to ``dest`` (path or stream) if given and
    always returns the text."""
    out = io.StringIO()
    out.write(f"{grid.ndim}\n")
    out.write(" ".join(str(d) for d in grid.dims) + f" {grid.resolution!r}\n")
    occ = grid.occupancy if grid.ndim == 3 else grid.occupancy[:, :, None]
    for z in range(occ.shape[2]):
        if z:
            out.write("\n")
        for y in range(occ.shape[1]):
            out.write("".join("1" if v else "0" for v in occ[:, y, z]) + "\n")
    text = out.getvalue()
    if dest is not None:
        if hasattr(dest, "write"):
            dest.write(text)
        else:
            with open(dest, "w") as fh:
                fh.write(text)
    return text


def generate_random_map(seed: int, dims: Iterable[int], resolution: float = 1.0,
                        obstacle_density: float = 0.2) -> GridMap:
    """Uniformly scattered obstacles; exactly ``round(density * ncells)`` are occupied."""
    if not 0.0 <= obstacle_density <= 1.0:
        raise ValueError(f"obstacle_density must lie in [0, 1], got {obstacle_density}")
    dims = tuple(int(d) for d in dims)
    n = int(np.prod(dims))
    k = int(round(obstacle_density * n))
    rng = np.random.default_rng(seed)
    flat = np.zeros(n, dtype=bool)
    flat[rng.permutation(n)[:k]] = True
    return GridMap(flat.reshape(dims), resolution)


def generate_ucorridor_map(seed: int, dims=(28, 20), resolution: float = 0.5,
                          detour_slack=None):
    """2D map with a thick wall separating start and goal.

    The wall is pierced by a one-cell-wide corridor on the straight line
    between start and goal, with a two-cell U-shaped dip in the middle. This
    is the shortest grid route, but a vehicle has to stop twice to get
    through it. A wide gap further away gives a route that is
    ``detour_slack`` meters longer (checked with a grid search) but can be
    flown without stopping. The default slack range is half a cell to one
    and a half cells.

    Column offsets of the corridor bends and of the goal relative to the
    start are even, and so is the dip depth, so second-order lattices whose
    displacement unit is half a cell can come to rest wherever the
    corridor turns.

    Returns ``(grid, start_cell, goal_cell)``.
    """
    from .lowdim import NoPath, build_delta_space

    nx, ny = dims
    if nx < 16 or ny < 14:
        raise ValueError(f"U-corridor maps need at least 16 x 14 cells, got {tuple(dims)}")
    rng = np.random.default_rng(seed)
    lo, hi = detour_slack if detour_slack is not None else (0.5 * resolution, 1.5 * resolution)
    for _ in range(1000):
        occ = np.zeros(dims, dtype=bool)
        sign = 1 if rng.random() < 0.5 else -1
        # dip side gets 4-6 rows of room, the rest goes to the gap side
        room = int(rng.integers(4, 7))
        cy = room if sign < 0 else ny - 1 - room
        sx = int(rng.integers(1, 3))
        gx = nx - 1 - int(rng.integers(1, 3))
        gx -= (gx - sx) % 2
        thick = int(rng.integers(6, 9))
        x0 = (nx - thick) // 2 + int(rng.integers(-1, 2))
        x1 = x0 + thick
        if gx < x1:
            continue
        occ[x0:x1, :] = True

        yl = cy + 2 * sign
        a = x0 + 1 + (x0 + 1 - sx) % 2
        b = x1 - 2 - (x1 - 2 - sx) % 2
        if b - a < 2:
            continue
        occ[x0:a, cy] = False
        occ[a, min(cy, yl):max(cy, yl) + 1] = False
        occ[a:b + 1, yl] = False
        occ[b, min(cy, yl):max(cy, yl) + 1] = False
        occ[b:x1, cy] = False

        width = int(rng.integers(4, 6))
        offset = int(rng.integers(4, 10))
        if sign > 0:
            g1 = cy - offset + 1
            g0 = g1 - width
            if g0 < 0:
                continue
        else:
            g0 = cy + offset
            g1 = g0 + width
            if g1 > ny:
                continue
        occ[x0:x1, g0:g1] = False

        grid = GridMap(occ, resolution)
        start, goal = (sx, cy), (gx, cy)
        try:
            short = build_delta_space(grid, start, goal, 0.0).c_star
            blocked = occ.copy()
            blocked[x0:x1, cy] = True
            detour = build_delta_space(GridMap(blocked, resolution), start, goal, 0.0).c_star
        except NoPath:  # pragma: no cover
            continue
        if lo <= detour - short <= hi:
            return grid, start, goal
    raise ValueError(f"no U-corridor layout fits dims {tuple(dims)} (seed {seed})")
