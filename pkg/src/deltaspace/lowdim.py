"""Resumable forward/backward grid A* and delta-space construction.

A delta-space for a task (start, goal) is the set of grid cells lying on some
start->goal path at most ``delta`` meters longer than the shortest one::

    g_fwd(c) + g_bwd(c) <= c_star + delta

Both searches are plain A* runs that can be paused at any f-bound and
resumed later with a larger one. Because the octile heuristic is consistent,
a cell whose combined cost satisfies the condition above has f <= bound in
either search, so it is guaranteed to be expanded by both.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from enum import Enum

from .grid_map import GridMap, neighbors, octile_distance

# Absolute slack for float comparisons against cost bounds (meters).
EPS = 1e-9


class NoPath(Exception):
    """Start and goal are not connected in the grid."""


class NotMember(KeyError):
    """Queried cell is not part of the delta-space."""


class Direction(Enum):
    FORWARD = "forward"
    BACKWARD = "backward"


@dataclass
class ResumableSearch:
    """A* from ``root`` towards ``target`` that can be stopped at any f-bound.

    The grid graph is undirected with symmetric costs, so a backward search
    is just a forward search rooted at the goal.
    """

    grid: GridMap
    root: tuple
    target: tuple
    direction: Direction = Direction.FORWARD
    g: dict = field(default_factory=dict)
    expanded: dict = field(default_factory=dict)  # cell -> g at expansion
    open: list = field(default_factory=list)
    expansions: int = 0
    bound: float = -math.inf

    def __post_init__(self):
        self.root = tuple(self.root)
        self.target = tuple(self.target)
        if not self.g:
            self.g[self.root] = 0.0
            self._push(self.root, 0.0)

    def heuristic(self, c) -> float:
        return octile_distance(c, self.target, self.grid.resolution)

    def _push(self, c, g):
        # larger g first among equal f
        heapq.heappush(self.open, (g + self.heuristic(c), -g, c))

    def _clean(self):
        op, gv, ex = self.open, self.g, self.expanded
        while op:
            f, ng, c = op[0]
            if c in ex or -ng > gv[c]:
                heapq.heappop(op)
            else:
                return

    @property
    def f_frontier(self) -> float:
        """f-value of the next cell to expand, ``inf`` once exhausted."""
        self._clean()
        return self.open[0][0] if self.open else math.inf

    @property
    def exhausted(self) -> bool:
        return self.f_frontier == math.inf

    def step(self):
        """Expand one cell; returns it, or None when the open list is empty."""
        self._clean()
        if not self.open:
            return None
        _, ng, c = heapq.heappop(self.open)
        g = -ng
        self.expanded[c] = g
        self.expansions += 1
        gv = self.g
        for n, cost in neighbors(self.grid, c):
            if n in self.expanded:
                continue
            ng2 = g + cost
            if ng2 < gv.get(n, math.inf):
                gv[n] = ng2
                self._push(n, ng2)
        return c

    def run_until_f_exceeds(self, bound: float) -> int:
        """Expand every cell with f <= ``bound``; returns the number of new expansions."""
        if bound < self.bound:
            raise ValueError(f"bound must not decrease ({bound} < {self.bound})")
        self.bound = bound
        n0 = self.expansions
        while self.f_frontier <= bound + EPS:
            self.step()
        return self.expansions - n0

    def run_until_expanded(self, c) -> bool:
        """Expand until ``c`` has been expanded; False if the search exhausts first."""
        c = tuple(c)
        while c not in self.expanded:
            if self.step() is None:
                return False
        return True


@dataclass
class DeltaSpace:
    """Result of the dual low-dimensional search for one task."""

    grid: GridMap
    forward: ResumableSearch
    backward: ResumableSearch
    c_star: float
    delta: float
    members: set = field(default_factory=set)

    @property
    def start_cell(self) -> tuple:
        return self.forward.root

    @property
    def goal_cell(self) -> tuple:
        return self.backward.root

    @property
    def saturated(self) -> bool:
        """True once both searches have run out of cells to expand."""
        return self.forward.exhausted and self.backward.exhausted

    def __contains__(self, c) -> bool:
        return tuple(c) in self.members

    def __len__(self) -> int:
        return len(self.members)

    def _refresh(self) -> list:
        bound = self.c_star + self.delta + EPS
        fe, be = self.forward.expanded, self.backward.expanded
        if len(fe) > len(be):
            fe, be = be, fe
        added = []
        for c, g1 in fe.items():
            if c in self.members:
                continue
            g2 = be.get(c)
            if g2 is not None and g1 + g2 <= bound:
                added.append(c)
        self.members.update(added)
        return sorted(added)

    def dump(self, dest=None) -> str:
        """Member cells as ``x y [z] g_fwd g_bwd`` lines."""
        lines = []
        for c in sorted(self.members):
            lines.append(" ".join(str(i) for i in c)
                         + f" {self.forward.expanded[c]!r} {self.backward.expanded[c]!r}")
        text = "\n".join(lines) + ("\n" if lines else "")
        if dest is not None:
            dest.write(text)
        return text


def run_until_f_exceeds(search: ResumableSearch, grid: GridMap, bound: float) -> int:
    if search.grid is not grid:
        raise ValueError("search was created for a different map")
    return search.run_until_f_exceeds(bound)


def build_delta_space(grid: GridMap, start, goal, delta: float) -> DeltaSpace:
    """Run forward and backward A* far enough to know every cell of the
    delta-space for ``delta``.

    Raises:
        NoPath: if goal cannot be reached from start.
    """
    start, goal = tuple(start), tuple(goal)
    if delta < 0:
        raise ValueError("delta must be >= 0")
    for name, c in (("start", start), ("goal", goal)):
        if not grid.is_free(c):
            raise ValueError(f"{name} cell {c} is not a free in-bounds cell")
    fwd = ResumableSearch(grid, start, goal, Direction.FORWARD)
    bwd = ResumableSearch(grid, goal, start, Direction.BACKWARD)
    if not fwd.run_until_expanded(goal):
        raise NoPath(f"no grid path from {start} to {goal}")
    c_star = fwd.expanded[goal]
    ds = DeltaSpace(grid, fwd, bwd, c_star, float(delta))
    fwd.run_until_f_exceeds(c_star + delta)
    bwd.run_until_f_exceeds(c_star + delta)
    ds._refresh()
    return ds


def contains(ds: DeltaSpace, c) -> bool:
    return tuple(c) in ds.members


def extend_delta_space(ds: DeltaSpace, new_delta: float) -> list:
    """Grow ``ds`` to ``new_delta`` by resuming both searches; returns the
    cells that joined the delta-space, sorted."""
    if new_delta < ds.delta:
        raise ValueError(f"new_delta {new_delta} < current delta {ds.delta}")
    ds.delta = float(new_delta)
    bound = ds.c_star + ds.delta
    ds.forward.run_until_f_exceeds(bound)
    ds.backward.run_until_f_exceeds(bound)
    return ds._refresh()


def cost_to_goal(ds: DeltaSpace, c) -> float:
    c = tuple(c)
    if c not in ds.members:
        raise NotMember(c)
    return ds.backward.expanded[c]


def extract_path(ds: DeltaSpace) -> list:
    """One shortest start->goal cell path by greedy descent over delta-space
    members with ``g_fwd + g_bwd == c_star``."""
    fe, be = ds.forward.expanded, ds.backward.expanded
    c_star = ds.c_star
    cur = ds.start_cell
    path = [cur]
    tol = 1e-7 * max(1.0, c_star)
    while cur != ds.goal_cell:
        best = None
        for n, cost in neighbors(ds.grid, cur):
            if n not in fe or n not in be:
                continue
            if abs(fe[n] + be[n] - c_star) > tol:
                continue
            if abs(be[cur] - cost - be[n]) > tol:
                continue
            key = (be[n], n)
            if best is None or key < best:
                best = key
        if best is None:
            raise NoPath("delta-space does not contain an optimal path")
        cur = best[1]
        path.append(cur)
    return path
