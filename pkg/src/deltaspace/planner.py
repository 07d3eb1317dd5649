"""A* over the pruned state lattice and anytime planning in growing delta-spaces.

The search snapshot (:class:`PlannerState`) keeps the open list, g/f values,
parent pointers and the boundary list: states generated from an expanded
state but lying outside the current search space. When the space grows,
:func:`resume` moves boundary states that became valid into the open list
and continues the same A* run. The closed list is not carried over between
iterations; each state may be re-expanded once per iteration.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

from .grid_map import GridMap
from .heuristics import Heuristic, HeuristicKind, VelocityProfileTable, bind
from .lattice import LatticeConfig, LatticeState, MotionPrimitive, make_primitive, successor_moves
from .lowdim import DeltaSpace, build_delta_space, extend_delta_space
from .search_space import DeltaSearchSpace, SearchSpace

COST_TOL = 1e-9

SOLVED = "solved"
NO_SOLUTION = "no_solution"
LIMIT_EXCEEDED = "limit_exceeded"


class NoSolution(Exception):
    """No trajectory was found."""


@dataclass
class Limits:
    max_expansions: Optional[int] = None
    max_time: Optional[float] = None


@dataclass
class Trajectory:
    states: list
    primitives: list
    config: LatticeConfig

    @property
    def total_cost(self) -> float:
        return float(sum(p.cost for p in self.primitives))

    @property
    def duration(self) -> float:
        return len(self.primitives) * self.config.tau

    @property
    def cells(self) -> list:
        return [s.pos for s in self.states]

    def __len__(self):
        return len(self.primitives)


@dataclass
class IterationRecord:
    delta: float
    expansions: int
    cost: Optional[float]


@dataclass
class PlanStats:
    expansions: int = 0
    reexpansions: int = 0
    wall_time: float = 0.0
    cost: Optional[float] = None
    status: str = NO_SOLUTION
    iterations: list = field(default_factory=list)
    promoted: int = 0
    delta_space: Optional[DeltaSpace] = None

    @property
    def success(self) -> bool:
        return self.cost is not None


@dataclass
class PlannerState:
    """Resumable A* snapshot."""

    config: LatticeConfig
    start: LatticeState
    goal: tuple
    open: list = field(default_factory=list)          # (f, -g, state)
    g_values: dict = field(default_factory=dict)
    f_values: dict = field(default_factory=dict)
    parents: dict = field(default_factory=dict)       # state -> (parent, Move)
    boundary: dict = field(default_factory=dict)      # state -> (g, parent, Move)
    expansion_counts: dict = field(default_factory=dict)
    ever_expanded: set = field(default_factory=set)
    iteration: int = 0
    incumbent: Optional[Trajectory] = None
    max_reexpansions: Optional[int] = 1

    @property
    def incumbent_cost(self) -> float:
        return self.incumbent.total_cost if self.incumbent is not None else math.inf


def goal_satisfied(state: LatticeState, goal) -> bool:
    """Goal cell reached at rest (zero velocity and acceleration)."""
    return state.pos == tuple(goal) and not any(state.vel) and not any(state.acc)


def _as_heuristic_fn(heuristic, config, goal, grid, space, table):
    if heuristic is None:
        return lambda s: 0.0
    if callable(heuristic) and not isinstance(heuristic, Heuristic):
        return heuristic
    ds = getattr(space, "ds", None)
    return bind(heuristic, config, goal, grid, ds=ds, table=table)


def _reconstruct(ps: PlannerState, goal_state: LatticeState, grid: GridMap) -> Trajectory:
    chain = [goal_state]
    moves = []
    s = goal_state
    while s != ps.start:
        parent, mv = ps.parents[s]
        moves.append(mv)
        chain.append(parent)
        s = parent
    chain.reverse()
    moves.reverse()
    cfg = ps.config
    prims = []
    for s0, mv in zip(chain, moves):
        prims.append(make_primitive(s0, tuple(k * cfg.du for k in mv.k), cfg, grid))
    return Trajectory(chain, prims, cfg)


def _search(ps: PlannerState, grid: GridMap, space: SearchSpace, h: Callable,
            limits: Limits, stats: PlanStats) -> None:
    cfg = ps.config
    open_, G, F, parents, boundary = ps.open, ps.g_values, ps.f_values, ps.parents, ps.boundary
    counts, ever = ps.expansion_counts, ps.ever_expanded
    allowed = math.inf if ps.max_reexpansions is None else 1 + ps.max_reexpansions
    inside = space.inside
    goal = ps.goal
    max_exp = limits.max_expansions if limits and limits.max_expansions is not None else math.inf
    deadline = (time.perf_counter() + limits.max_time) if limits and limits.max_time is not None else None
    heappush, heappop = heapq.heappush, heapq.heappop
    n = 0
    best = ps.incumbent_cost

    while open_:
        f, ng, s = open_[0]
        g = -ng
        if g != G.get(s):
            heappop(open_)
            continue
        if f >= best - COST_TOL:
            break
        if counts.get(s, 0) >= allowed:
            heappop(open_)
            continue
        if n >= max_exp or (deadline is not None and (n & 63) == 0 and time.perf_counter() > deadline):
            stats.expansions += n
            stats.status = LIMIT_EXCEEDED
            return
        heappop(open_)
        if s.pos == goal and not any(s.vel) and not any(s.acc):
            if g < best - COST_TOL:
                ps.incumbent = _reconstruct(ps, s, grid)
            break
        counts[s] = counts.get(s, 0) + 1
        n += 1
        if s in ever:
            stats.reexpansions += 1
        else:
            ever.add(s)
        for mv, s2 in successor_moves(s, cfg, grid):
            g2 = g + mv.cost
            if not inside(s2.pos):
                b = boundary.get(s2)
                if b is None or g2 < b[0] - COST_TOL:
                    boundary[s2] = (g2, s, mv)
                continue
            if g2 < G.get(s2, math.inf) - COST_TOL:
                if counts.get(s2, 0) >= allowed:
                    continue
                G[s2] = g2
                parents[s2] = (s, mv)
                f2 = g2 + h(s2)
                F[s2] = f2
                heappush(open_, (f2, -g2, s2))

    stats.expansions += n
    if ps.incumbent is not None:
        stats.status = SOLVED
        stats.cost = ps.incumbent.total_cost
    else:
        stats.status = NO_SOLUTION


def _finish(stats: PlanStats, ps: PlannerState, t0: float):
    stats.wall_time = time.perf_counter() - t0
    stats.cost = ps.incumbent.total_cost if ps.incumbent is not None else None
    return ps.incumbent, ps, stats


def plan(grid: GridMap, space: SearchSpace, start: LatticeState, goal, config: LatticeConfig,
         heuristic: Union[Heuristic, Callable, None] = None, limits: Limits = None,
         table: VelocityProfileTable = None, max_reexpansions: Optional[int] = 1):
    """A* from ``start`` to ``goal`` (a cell, reached at rest) inside ``space``.

    Successors outside ``space`` go to the boundary list instead of the open
    list. Returns ``(trajectory or None, planner_state, stats)``; the
    planner state can be passed to :func:`resume` after the space grows.
    ``stats.status`` is one of ``solved``, ``no_solution``, ``limit_exceeded``.
    """
    t0 = time.perf_counter()
    if abs(grid.resolution - config.resolution) > 1e-12 or grid.ndim != config.dims:
        raise ValueError("lattice config does not match the map (resolution/dims)")
    goal = tuple(goal)
    start = LatticeState(tuple(start.pos), tuple(start.vel), tuple(start.acc))
    if not space.inside(start.pos):
        raise ValueError(f"start cell {start.pos} is not inside the search space")
    ps = PlannerState(config, start, goal, max_reexpansions=max_reexpansions)
    stats = PlanStats()
    if goal_satisfied(start, goal):
        ps.incumbent = Trajectory([start], [], config)
        stats.status = SOLVED
        return _finish(stats, ps, t0)
    h = _as_heuristic_fn(heuristic, config, goal, grid, space, table)
    ps.g_values[start] = 0.0
    f0 = h(start)
    ps.f_values[start] = f0
    heapq.heappush(ps.open, (f0, -0.0, start))
    _search(ps, grid, space, h, limits or Limits(), stats)
    return _finish(stats, ps, t0)


def resume(ps: PlannerState, grid: GridMap, space: SearchSpace,
           heuristic: Union[Heuristic, Callable, None] = None, limits: Limits = None,
           table: VelocityProfileTable = None):
    """Continue a previous search after ``space`` has grown.

    Boundary states that are now inside are seeded with the g-value through
    their cheapest recorded parent and pushed onto the open list; expansion
    counters start over. The incumbent is only replaced by a strictly
    cheaper trajectory.
    """
    t0 = time.perf_counter()
    h = _as_heuristic_fn(heuristic, ps.config, ps.goal, grid, space, table)
    ps.iteration += 1
    ps.expansion_counts = {}
    stats = PlanStats()
    promoted = [s for s in ps.boundary if space.inside(s.pos)]
    for s in sorted(promoted):
        g2, parent, mv = ps.boundary.pop(s)
        if g2 < ps.g_values.get(s, math.inf) - COST_TOL:
            ps.g_values[s] = g2
            ps.parents[s] = (parent, mv)
            f2 = g2 + h(s)
            ps.f_values[s] = f2
            heapq.heappush(ps.open, (f2, -g2, s))
    stats.promoted = len(promoted)
    _search(ps, grid, space, h, limits or Limits(), stats)
    return _finish(stats, ps, t0)


def plan_anytime(grid: GridMap, start: LatticeState, goal, config: LatticeConfig,
                 delta0: float, delta_step: float, heuristic: Union[Heuristic, None] = None,
                 budget: float = math.inf, delta_max: Optional[float] = None,
                 limits: Limits = None, table: VelocityProfileTable = None,
                 max_reexpansions: Optional[int] = 1):
    """Plan in a delta-space of size ``delta0``, then keep growing delta by
    ``delta_step`` and resuming both search levels while time remains.

    The budget is checked between iterations. Iteration stops early once
    ``delta_max`` would be exceeded or the delta-space cannot grow anymore.

    Returns ``(trajectory, stats)``; raises :class:`NoSolution` if no
    iteration found a trajectory.
    """
    if delta0 < 0 or not delta_step > 0:
        raise ValueError("need delta0 >= 0 and delta_step > 0")
    t0 = time.perf_counter()
    heuristic = heuristic if heuristic is not None else Heuristic(HeuristicKind.ZERO)
    ds = build_delta_space(grid, start.pos, goal, delta0)
    space = DeltaSearchSpace(ds)
    h = bind(heuristic, config, goal, grid, ds=ds, table=table)
    traj, ps, st = plan(grid, space, start, goal, config, h, limits, max_reexpansions=max_reexpansions)
    total = PlanStats(expansions=st.expansions, reexpansions=st.reexpansions)
    total.iterations.append(IterationRecord(ds.delta, st.expansions, st.cost))
    while time.perf_counter() - t0 < budget:
        nxt = ds.delta + delta_step
        if delta_max is not None and nxt > delta_max + 1e-9:
            break
        if ds.saturated and not ps.boundary:
            break
        extend_delta_space(ds, nxt)
        traj, ps, st = resume(ps, grid, space, h, limits)
        total.expansions += st.expansions
        total.reexpansions += st.reexpansions
        total.promoted += st.promoted
        total.iterations.append(IterationRecord(ds.delta, st.expansions, ps.incumbent_cost if ps.incumbent else None))
    total.wall_time = time.perf_counter() - t0
    if ps.incumbent is None:
        raise NoSolution(f"no trajectory found up to delta={ds.delta}")
    total.cost = ps.incumbent.total_cost
    total.status = SOLVED
    total.delta_space = ds
    return ps.incumbent, total


def save_trajectory(traj: Trajectory, dest=None, grid: GridMap = None) -> str:
    """Text export: ``#`` header, the start state line, then for every
    primitive a segment line ``t0 u... tau`` followed by its end-state line
    ``p... v... [a...]`` (metric values)."""
    cfg = traj.config
    origin = grid.origin if grid is not None else (0.0,) * cfg.dims
    lines = [
        f"# order {cfg.order}",
        f"# config rho={cfg.rho!r} tau={cfg.tau!r} v_max={cfg.v_max!r} a_max={cfg.a_max!r} "
        f"u_max={cfg.u_max!r} du={cfg.du!r} dims={cfg.dims} resolution={cfg.resolution!r}",
        f"# cost {traj.total_cost!r}",
        f"# duration {traj.duration!r}",
        f"# segments {len(traj.primitives)}",
    ]

    def state_line(s):
        p = [o + (i + 0.5) * cfg.resolution for o, i in zip(origin, s.pos)]
        vals = p + [v * cfg.vel_unit for v in s.vel] + [a * cfg.acc_unit for a in s.acc]
        return " ".join(repr(float(x)) for x in vals)

    lines.append(state_line(traj.states[0]))
    for i, (prim, s) in enumerate(zip(traj.primitives, traj.states[1:])):
        lines.append(" ".join(repr(float(x)) for x in (i * cfg.tau, *prim.u, prim.tau)))
        lines.append(state_line(s))
    text = "\n".join(lines) + "\n"
    if dest is not None:
        if hasattr(dest, "write"):
            dest.write(text)
        else:
            with open(dest, "w") as fh:
                fh.write(text)
    return text


def load_trajectory(source) -> dict:
    """Parse a trajectory file into header fields, states and segments."""
    text = source.read() if hasattr(source, "read") else source
    header, body = {}, []
    for ln in text.splitlines():
        if ln.startswith("#"):
            key, _, val = ln[1:].strip().partition(" ")
            header[key] = val
        elif ln.strip():
            body.append([float(x) for x in ln.split()])
    states = [body[0]] + body[2::2]
    segments = body[1::2]
    return {
        "order": int(header["order"]),
        "cost": float(header["cost"]),
        "duration": float(header["duration"]),
        "config": header.get("config", ""),
        "states": states,
        "segments": segments,
    }
