"""Cost-to-go estimates for the lattice search.

All estimates are in primitive-cost units (control effort + rho * time) and
are multiplied by a weight ``w >= 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

import numpy as np

from .grid_map import GridMap
from .lattice import LatticeConfig, LatticeState, snap_index
from .lowdim import DeltaSpace, cost_to_goal


class HeuristicKind(Enum):
    ZERO = "zero"
    STRAIGHT_LINE = "straight_line"
    DELTA_DISTANCE = "delta_distance"
    VELOCITY_PROFILE = "velocity_profile"


@dataclass(frozen=True)
class Heuristic:
    kind: HeuristicKind = HeuristicKind.ZERO
    weight: float = 1.0

    def __post_init__(self):
        if isinstance(self.kind, str):
            object.__setattr__(self, "kind", HeuristicKind(self.kind))
        if self.weight < 1:
            raise ValueError("heuristic weight must be >= 1")

    @property
    def admissible(self) -> bool:
        return self.weight == 1 and self.kind in (HeuristicKind.ZERO, HeuristicKind.STRAIGHT_LINE)


@dataclass
class VelocityProfileTable:
    """Minimum-time 1D velocity transfers between all lattice velocities.

    ``t[i, j]``, ``c[i, j]`` and ``d[i, j]`` are time, control effort and
    signed displacement of the transfer from ``velocities[i]`` to
    ``velocities[j]``.
    """

    velocities: np.ndarray
    t: np.ndarray
    c: np.ndarray
    d: np.ndarray
    config: LatticeConfig = None
    _index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        unit = self.unit
        self._index = {int(round(float(v) / unit)): i for i, v in enumerate(self.velocities)}

    @property
    def unit(self) -> float:
        if self.config is not None:
            return self.config.vel_unit
        pos = self.velocities[self.velocities > 0]
        return float(pos.min()) if len(pos) else 1.0

    def index_of(self, v: float) -> int:
        return self._index[round(v / self.unit)]

    def dump(self, dest=None) -> str:
        cfg = self.config
        lines = []
        if cfg is not None:
            lines.append(f"# order={cfg.order} tau={cfg.tau!r} v_max={cfg.v_max!r} "
                         f"u_max={cfg.u_max!r} du={cfg.du!r}")
        lines.append("# v1 v2 t c d")
        n = len(self.velocities)
        for i in range(n):
            for j in range(n):
                vals = (self.velocities[i], self.velocities[j],
                        self.t[i, j], self.c[i, j], self.d[i, j])
                lines.append(" ".join(repr(float(v)) for v in vals))
        text = "\n".join(lines) + "\n"
        if dest is not None:
            dest.write(text)
        return text


def load_profile_table(source, config: LatticeConfig = None) -> VelocityProfileTable:
    text = source.read() if hasattr(source, "read") else source
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    vals = np.array([[float(x) for x in r] for r in rows])
    vel = np.unique(vals[:, 0])
    n = len(vel)
    if n * n != len(vals):
        raise ValueError("table is not a full velocity x velocity grid")
    pos = {float(v): i for i, v in enumerate(vel)}
    t, c, d = (np.zeros((n, n)) for _ in range(3))
    for v1, v2, tt, cc, dd in vals:
        i, j = pos[float(v1)], pos[float(v2)]
        t[i, j], c[i, j], d[i, j] = tt, cc, dd
    return VelocityProfileTable(vel, t, c, d, config)


def precompute_profile_table(config: LatticeConfig) -> VelocityProfileTable:
    """Exhaustive breadth-first search over 1D input sequences.

    For each velocity pair the transfer with the fewest primitives wins;
    ties are broken by control effort, then by the smaller absolute
    displacement. Arithmetic is exact (rational) until the final conversion.
    """
    if config.order != 2:
        raise ValueError("velocity-profile tables are only defined for second-order lattices")
    nv = config.max_vel_index
    nk = config.n_inputs
    vels = list(range(-nv, nv + 1))
    n = len(vels)
    tau = Fraction(config.tau)
    du = Fraction(config.du)
    t = np.zeros((n, n))
    c = np.zeros((n, n))
    d = np.zeros((n, n))
    for i, v1 in enumerate(vels):
        # velocity index -> set of (effort, displacement) reachable in `steps`
        layer = {v1: {(Fraction(0), Fraction(0))}}
        done = {v1: (0, Fraction(0), Fraction(0))}
        steps = 0
        while len(done) < n:
            steps += 1
            nxt = {}
            for iv, opts in layer.items():
                for k in range(-nk, nk + 1):
                    iv2 = iv + k
                    if abs(iv2) > nv:
                        continue
                    de = k * k * du * du * tau
                    dd = du * tau * tau * (iv + Fraction(k, 2))
                    bucket = nxt.setdefault(iv2, set())
                    for e, x in opts:
                        bucket.add((e + de, x + dd))
            if nk == 0:
                break
            for iv2, opts in nxt.items():
                if iv2 not in done:
                    e, x = min(opts, key=lambda p: (p[0], abs(p[1]), p[1]))
                    done[iv2] = (steps, e, x)
            layer = nxt
        for j, v2 in enumerate(vels):
            if v2 in done:
                s, e, x = done[v2]
                t[i, j] = float(s * tau)
                c[i, j] = float(e)
                d[i, j] = float(x)
            else:
                t[i, j] = c[i, j] = d[i, j] = math.inf
    velocities = np.array([v * config.vel_unit for v in vels])
    return VelocityProfileTable(velocities, t, c, d, config)


def velocity_profile_estimate(state: LatticeState, dist: float, table: VelocityProfileTable,
                              rho: float, weight: float = 1.0) -> float:
    """Accelerate to the highest velocity that still allows stopping within
    ``dist``, cruise, then decelerate to rest.

    The start velocity is the largest absolute per-axis velocity of ``state``.
    When no positive cruise velocity fits, the smallest positive velocity is
    used with zero cruise time.
    """
    if dist <= 0 and not any(state.vel):
        return 0.0
    vi = max(abs(x) for x in state.vel) if state.vel else 0
    i = table._index[vi]
    i0 = table._index[0]
    vel, t, c, d = table.velocities, table.t, table.c, table.d
    cap = None
    for j in range(len(vel) - 1, -1, -1):
        if vel[j] <= 0:
            break
        if d[i, j] + d[j, i0] <= dist + 1e-9:
            cap = j
            break
    if cap is None:
        cap = i0 + 1 if i0 + 1 < len(vel) else i0
        cruise = 0.0
    else:
        cruise = max(0.0, (dist - d[i, cap] - d[cap, i0]) / vel[cap])
    T = cruise + t[i, cap] + t[cap, i0]
    effort = c[i, cap] + c[cap, i0]
    return weight * (effort + rho * T)


def delta_distance_estimate(state: LatticeState, ds: DeltaSpace, config: LatticeConfig,
                            rho: float, weight: float = 1.0) -> float:
    """Time at full speed along the remaining shortest grid path."""
    return weight * rho * cost_to_goal(ds, state.pos) / config.v_max


def lattice_speed(config: LatticeConfig) -> float:
    """Largest per-axis distance a single primitive can move, per second.

    Usually ``v_max``; can be slightly more when snapping the endpoint to the
    nearest cell rounds up, or when a third-order primitive overshoots
    ``v_max`` between its endpoints.
    """
    tau = config.tau
    reach = config.v_max * tau
    if config.order == 3:
        reach += config.u_max * tau ** 3 / 12.0
    cells = snap_index(reach / config.resolution)
    return max(reach, cells * config.resolution) / tau


def straight_line_estimate(state: LatticeState, goal: LatticeState, config: LatticeConfig,
                           rho: float, weight: float = 1.0) -> float:
    """Lower bound on flight time from the largest per-axis distance to the goal.

    Velocity bounds are per axis, so the Chebyshev distance (not the
    Euclidean one) over the per-axis speed limit bounds the flight time
    from below.
    """
    goal_pos = goal.pos if isinstance(goal, LatticeState) else tuple(goal)
    dist = max(abs(a - b) for a, b in zip(state.pos, goal_pos)) * config.resolution
    return weight * rho * dist / lattice_speed(config)


def bind(heuristic: Heuristic, config: LatticeConfig, goal_cell, grid: GridMap = None,
         ds: DeltaSpace = None, table: VelocityProfileTable = None):
    """Return ``h(state) -> float`` for use by the planner.

    Distance-based estimates read the remaining path length from the
    backward search of ``ds``. Cells it has not reached fall back to the
    octile distance; without ``ds`` the velocity-profile estimate uses the
    straight-line distance.
    """
    kind, w, rho = heuristic.kind, heuristic.weight, config.rho
    goal_cell = tuple(goal_cell)
    res = config.resolution

    if kind is HeuristicKind.ZERO:
        return lambda s: 0.0

    if kind is HeuristicKind.STRAIGHT_LINE:
        scale = w * rho * res / lattice_speed(config)

        def h(s):
            return scale * max(abs(a - b) for a, b in zip(s.pos, goal_cell))
        return h

    from .grid_map import octile_distance

    bexp = ds.backward.expanded if ds is not None else {}

    def grid_dist(cell):
        g = bexp.get(cell)
        if g is None:
            if ds is None:
                return res * math.dist(cell, goal_cell)
            g = octile_distance(cell, goal_cell, res)
        return g

    if kind is HeuristicKind.DELTA_DISTANCE:
        if ds is None:
            raise ValueError("delta_distance heuristic needs a delta-space")
        scale = w * rho / config.v_max
        return lambda s: scale * grid_dist(s.pos)

    if kind is HeuristicKind.VELOCITY_PROFILE:
        if config.order != 2:
            raise ValueError("velocity_profile heuristic supports second-order lattices only")
        tbl = table if table is not None else precompute_profile_table(config)
        cache = {}

        def h(s):
            if s.pos == goal_cell and not any(s.vel):
                return 0.0
            key = (s.pos, max(abs(x) for x in s.vel))
            v = cache.get(key)
            if v is None:
                v = velocity_profile_estimate(s, grid_dist(s.pos), tbl, rho, w)
                cache[key] = v
            return v
        return h

    raise ValueError(f"unknown heuristic kind {kind}")  # pragma: no cover
