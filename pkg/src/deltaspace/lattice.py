"""State lattice of constant-input polynomial motion primitives.

Lattice states store integer indices only, so hashing never depends on float
rounding:

* second order: velocity index unit ``du * tau``
* third order: acceleration index unit ``du * tau``, velocity index unit
  ``du * tau**2 / 2`` (closed under ``v' = v + a tau + u tau^2 / 2``)

Positions are cell indices. A primitive starts at the center of its start
cell; the continuous endpoint is snapped to the nearest cell center (ties
toward zero, so that single-cell rest-to-rest hops exist), while collision
checks follow the continuous polynomial.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .grid_map import GridMap, neighbor_offsets

BOUND_EPS = 1e-9


class BoundExceeded(ValueError):
    """An integration step left the velocity/acceleration box."""


@dataclass(frozen=True)
class LatticeConfig:
    order: int = 2
    rho: float = 10.0
    tau: float = 1.0
    v_max: float = 3.0
    a_max: float = 1.0
    u_max: float = 1.0
    du: float = 1.0
    dims: int = 2
    resolution: float = 1.0

    def __post_init__(self):
        if self.order not in (2, 3):
            raise ValueError(f"order must be 2 or 3, got {self.order}")
        if self.dims not in (2, 3):
            raise ValueError(f"dims must be 2 or 3, got {self.dims}")
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.rho < 0:
            raise ValueError("rho must be >= 0")
        if not self.du > 0:
            raise ValueError("du must be positive")
        if not (self.v_max > 0 and self.a_max > 0):
            raise ValueError("v_max and a_max must be positive")
        if not self.resolution > 0:
            raise ValueError("resolution must be positive")
        n = self.u_max / self.du
        if abs(n - round(n)) > 1e-9 or round(n) < 0:
            raise ValueError("u_max must be a non-negative integer multiple of du")

    @property
    def n_inputs(self) -> int:
        """Input steps per axis on each side of zero."""
        return int(round(self.u_max / self.du))

    @property
    def vel_unit(self) -> float:
        if self.order == 2:
            return self.du * self.tau
        return 0.5 * self.du * self.tau ** 2

    @property
    def acc_unit(self) -> float:
        return self.du * self.tau

    @property
    def max_vel_index(self) -> int:
        return int(math.floor(self.v_max / self.vel_unit + BOUND_EPS))

    @property
    def max_acc_index(self) -> int:
        return int(math.floor(self.a_max / self.acc_unit + BOUND_EPS))


class LatticeState(NamedTuple):
    pos: tuple
    vel: tuple
    acc: tuple = ()

    @property
    def order(self) -> int:
        return 3 if self.acc else 2


def make_state(pos, vel=None, acc=None, order: int = 2) -> LatticeState:
    """State from integer indices; velocity/acceleration default to rest."""
    pos = tuple(int(p) for p in pos)
    vel = tuple(int(v) for v in vel) if vel is not None else (0,) * len(pos)
    if order == 3:
        acc = tuple(int(a) for a in acc) if acc is not None else (0,) * len(pos)
    else:
        acc = ()
    return LatticeState(pos, vel, acc)


def state_from_values(config: LatticeConfig, pos, vel=None, acc=None) -> LatticeState:
    """State from metric velocity/acceleration values (must lie on the lattice)."""
    def idx(values, unit):
        out = []
        for v in values:
            k = v / unit
            if abs(k - round(k)) > 1e-9:
                raise ValueError(f"value {v} is not on the lattice (unit {unit})")
            out.append(int(round(k)))
        return out

    vel = idx(vel, config.vel_unit) if vel is not None else None
    acc = idx(acc, config.acc_unit) if acc is not None else None
    return make_state(pos, vel, acc, config.order)


def velocity(config: LatticeConfig, state: LatticeState) -> np.ndarray:
    return np.asarray(state.vel, dtype=float) * config.vel_unit


def acceleration(config: LatticeConfig, state: LatticeState) -> np.ndarray:
    if not state.acc:
        return np.zeros(len(state.pos))
    return np.asarray(state.acc, dtype=float) * config.acc_unit


def project(state: LatticeState) -> tuple:
    return state.pos


def primitive_cost(u, tau: float, rho: float) -> float:
    return float(sum(x * x for x in u)) * tau + rho * tau


def snap_index(x: float) -> int:
    """Nearest integer, ties toward zero."""
    q = abs(x)
    n = math.floor(q + 1e-9)
    if q - n > 0.5 + 1e-9:
        n += 1
    return n if x >= 0 else -n


def snap_indices(x: np.ndarray) -> np.ndarray:
    """Vectorized :func:`snap_index`: a point on a cell boundary belongs to the
    cell nearer the primitive's start, like the snapped endpoint."""
    q = np.abs(x)
    n = np.floor(q + 1e-9)
    n += (q - n) > 0.5 + 1e-9
    return np.sign(x) * n


def axis_step(config: LatticeConfig, iv: int, ia: int, k: int):
    """Per-axis integration of one primitive in index space.

    Returns ``(iv', ia', displacement_m)``.
    """
    tau = config.tau
    if config.order == 2:
        disp = config.du * tau * tau * (iv + 0.5 * k)
        return iv + k, 0, disp
    disp = config.du * tau ** 3 * (0.5 * iv + 0.5 * ia + k / 6.0)
    return iv + 2 * ia + k, ia + k, disp


def axis_poly(config: LatticeConfig, iv: int, ia: int, k: int, t):
    """Continuous displacement from the start point at times ``t``."""
    v = iv * config.vel_unit
    u = k * config.du
    if config.order == 2:
        return v * t + 0.5 * u * t * t
    a = ia * config.acc_unit
    return v * t + 0.5 * a * t * t + u * t ** 3 / 6.0


def _axis_speed_bound(config: LatticeConfig, iv: int, ia: int, k: int) -> float:
    v0 = iv * config.vel_unit
    u = k * config.du
    tau = config.tau
    if config.order == 2:
        return max(abs(v0), abs(v0 + u * tau))
    a0 = ia * config.acc_unit
    cands = [0.0, tau]
    if u != 0:
        ts = -a0 / u
        if 0 < ts < tau:
            cands.append(ts)
    return max(abs(v0 + a0 * t + 0.5 * u * t * t) for t in cands)


class Move(NamedTuple):
    """A primitive in start-cell-relative form, independent of position."""

    k: tuple           # input indices (unit du)
    vel: tuple
    acc: tuple
    shift: tuple       # snapped endpoint cell offset
    footprint: tuple   # cell offsets that must be free
    cost: float


def _sample_times(config: LatticeConfig, ks, ivs, ias) -> np.ndarray:
    speed = math.sqrt(sum(_axis_speed_bound(config, iv, ia, k) ** 2
                          for iv, ia, k in zip(ivs, ias, ks)))
    length = speed * config.tau
    n = max(4, int(math.ceil(length / (0.5 * config.resolution) - 1e-9)))
    return np.linspace(0.0, config.tau, n + 1)


def _axis_coeffs(config: LatticeConfig, iv: int, ia: int, k: int) -> np.ndarray:
    """Displacement polynomial in cells, highest power first."""
    v = iv * config.vel_unit
    u = k * config.du
    if config.order == 2:
        c = [0.5 * u, v, 0.0]
    else:
        c = [u / 6.0, 0.5 * ia * config.acc_unit, v, 0.0]
    return np.array(c) / config.resolution


def _boundary_times(coeffs: np.ndarray, tau: float) -> list:
    """Times in (0, tau) at which the polynomial crosses a cell boundary."""
    p = np.poly1d(coeffs)
    crit = [r.real for r in p.deriv().roots if abs(r.imag) < 1e-9 and 0 < r.real < tau]
    xs = p(np.array([0.0, tau, *crit]))
    lo = math.floor(xs.min() - 0.5)
    hi = math.ceil(xs.max() + 0.5)
    out = []
    for m in range(lo, hi + 1):
        for r in (p - (m + 0.5)).roots:
            if abs(r.imag) < 1e-7 and 1e-9 < r.real < tau - 1e-9:
                out.append(float(r.real))
    return out


@lru_cache(maxsize=1 << 16)
def _axis_path(config: LatticeConfig, iv: int, ia: int, k: int):
    """Displacement coefficients of one axis and its boundary-crossing times."""
    coeffs = _axis_coeffs(config, iv, ia, k)
    return coeffs, tuple(_boundary_times(coeffs, config.tau))


def _footprint(config: LatticeConfig, ks, ivs, ias, shift) -> tuple:
    """Cell offsets swept by the continuous path from the start cell center.

    The path is cut at every cell-boundary crossing and each piece is
    located by its midpoint. Where the path crosses two boundaries at once
    (through a cell corner or edge) the skipped axis-aligned neighbours are
    added too, mirroring the corner-cutting ban of the grid.
    """
    tau = config.tau
    paths = [_axis_path(config, iv, ia, k) for iv, ia, k in zip(ivs, ias, ks)]
    coeffs = [c for c, _ in paths]
    times = sorted(t for _, ts in paths for t in ts)
    cuts = [0.0]
    for t in times:
        if t - cuts[-1] > 1e-7:
            cuts.append(t)
    cuts.append(tau)
    mids = np.array([(a + b) / 2 for a, b in zip(cuts, cuts[1:])])
    pts = np.stack([np.polyval(c, mids) for c in coeffs], axis=1)
    cells = [(0,) * len(ks)]
    cells += [tuple(int(v) for v in row) for row in snap_indices(pts)]
    cells.append(tuple(shift))
    seq = []
    for c in cells:
        if not seq or seq[-1] != c:
            seq.append(c)
    offs = dict.fromkeys(seq)
    inter_of = {off: inter for off, _, inter in neighbor_offsets(len(ks))}
    for a, b in zip(seq, seq[1:]):
        d = tuple(j - i for i, j in zip(a, b))
        if any(abs(x) > 1 for x in d):
            raise AssertionError("missed a boundary crossing")  # pragma: no cover
        for o in inter_of[d]:
            offs[tuple(i + j for i, j in zip(a, o))] = None
    return tuple(offs)


@lru_cache(maxsize=64)
def _input_grid(n: int, ndim: int) -> tuple:
    return tuple(itertools.product(range(-n, n + 1), repeat=ndim))


class MotionTable:
    """Position-independent successor moves per (velocity, acceleration) key."""

    def __init__(self, config: LatticeConfig):
        self.config = config
        self._moves = {}

    def moves(self, vel: tuple, acc: tuple = ()) -> list:
        key = (vel, acc)
        out = self._moves.get(key)
        if out is not None:
            return out
        cfg = self.config
        vmax, amax = cfg.max_vel_index, cfg.max_acc_index
        ias = acc if acc else (0,) * len(vel)
        out = []
        for ks in _input_grid(cfg.n_inputs, len(vel)):
            nv, na, shift = [], [], []
            ok = True
            for iv, ia, k in zip(vel, ias, ks):
                v2, a2, disp = axis_step(cfg, iv, ia, k)
                if abs(v2) > vmax or (cfg.order == 3 and abs(a2) > amax):
                    ok = False
                    break
                nv.append(v2)
                na.append(a2)
                shift.append(snap_index(disp / cfg.resolution))
            if not ok:
                continue
            u = [k * cfg.du for k in ks]
            out.append(Move(
                tuple(ks), tuple(nv), tuple(na) if cfg.order == 3 else (),
                tuple(shift), _footprint(cfg, ks, vel, ias, shift),
                primitive_cost(u, cfg.tau, cfg.rho),
            ))
        self._moves[key] = out
        return out


@lru_cache(maxsize=32)
def motion_table(config: LatticeConfig) -> MotionTable:
    return MotionTable(config)


@dataclass(frozen=True)
class MotionPrimitive:
    u: tuple            # metric input per axis
    tau: float
    start: LatticeState
    end: LatticeState
    cost: float
    samples: np.ndarray  # metric sample points along the continuous polynomial
    footprint: tuple     # absolute cells swept by the path

    @property
    def duration(self) -> float:
        return self.tau


def _check_input(config: LatticeConfig, u) -> tuple:
    ks = []
    for x in u:
        k = x / config.du
        if abs(k - round(k)) > 1e-9:
            raise ValueError(f"input {x} is not a multiple of du={config.du}")
        k = int(round(k))
        if abs(k) > config.n_inputs:
            raise ValueError(f"|input| {abs(x)} exceeds u_max={config.u_max}")
        ks.append(k)
    return tuple(ks)


def integrate(state: LatticeState, u, tau: float, config: LatticeConfig) -> LatticeState:
    """Apply constant input ``u`` (metric, per axis) for ``tau`` seconds.

    Raises:
        BoundExceeded: if the end state violates v_max or a_max on some axis.
    """
    if abs(tau - config.tau) > 1e-12:
        raise ValueError("tau must equal the lattice primitive duration")
    ks = _check_input(config, u)
    ias = state.acc if state.acc else (0,) * len(state.pos)
    pos, vel, acc = [], [], []
    for p, iv, ia, k in zip(state.pos, state.vel, ias, ks):
        v2, a2, disp = axis_step(config, iv, ia, k)
        if abs(v2) > config.max_vel_index:
            raise BoundExceeded(f"velocity {v2 * config.vel_unit} exceeds v_max={config.v_max}")
        if config.order == 3 and abs(a2) > config.max_acc_index:
            raise BoundExceeded(f"acceleration {a2 * config.acc_unit} exceeds a_max={config.a_max}")
        pos.append(p + snap_index(disp / config.resolution))
        vel.append(v2)
        acc.append(a2)
    return LatticeState(tuple(pos), tuple(vel), tuple(acc) if config.order == 3 else ())


def continuous_end(state: LatticeState, u, config: LatticeConfig, grid: GridMap = None) -> np.ndarray:
    """Unsnapped metric endpoint of the primitive starting at the cell center."""
    ks = _check_input(config, u)
    ias = state.acc if state.acc else (0,) * len(state.pos)
    disp = np.array([axis_step(config, iv, ia, k)[2] for iv, ia, k in zip(state.vel, ias, ks)])
    origin = np.asarray(grid.origin) if grid is not None else np.zeros(len(ks))
    return origin + (np.asarray(state.pos) + 0.5) * config.resolution + disp


def make_primitive(state: LatticeState, u, config: LatticeConfig, grid: GridMap = None) -> MotionPrimitive:
    ks = _check_input(config, u)
    end = integrate(state, u, config.tau, config)
    ias = state.acc if state.acc else (0,) * len(state.pos)
    ts = _sample_times(config, ks, state.vel, ias)
    origin = np.asarray(grid.origin) if grid is not None else np.zeros(len(ks))
    start_pt = origin + (np.asarray(state.pos, dtype=float) + 0.5) * config.resolution
    pts = np.stack([axis_poly(config, iv, ia, k, ts) for iv, ia, k in zip(state.vel, ias, ks)], axis=1)
    shift = tuple(e - p for e, p in zip(end.pos, state.pos))
    fp = _footprint(config, ks, state.vel, ias, shift)
    fp_abs = tuple(tuple(p + o for p, o in zip(state.pos, off)) for off in fp)
    umet = tuple(k * config.du for k in ks)
    return MotionPrimitive(umet, config.tau, state, end,
                           primitive_cost(umet, config.tau, config.rho),
                           start_pt + pts, fp_abs)


def collision_free(primitive: MotionPrimitive, grid: GridMap) -> bool:
    """All covered cells are free and inside the map.

    The covered cells are those the continuous path passes through, the
    snapped end cell, and the axis-aligned cells next to any point where
    the path crosses a cell corner.
    """
    free = grid.free_set()
    return all(c in free for c in primitive.footprint)


def successors(state: LatticeState, config: LatticeConfig, grid: GridMap) -> list:
    """Bound-feasible, collision-free ``(primitive, end_state)`` pairs."""
    out = []
    for mv, end in successor_moves(state, config, grid):
        u = tuple(k * config.du for k in mv.k)
        out.append((make_primitive(state, u, config, grid), end))
    return out


def successor_moves(state: LatticeState, config: LatticeConfig, grid: GridMap) -> list:
    """Fast path of :func:`successors` returning ``(Move, end_state)``."""
    free = grid.free_set()
    pos = state.pos
    out = []
    for mv in motion_table(config).moves(state.vel, state.acc):
        if len(pos) == 2:
            x, y = pos
            if any((x + a, y + b) not in free for a, b in mv.footprint):
                continue
            end = (x + mv.shift[0], y + mv.shift[1])
        else:
            x, y, z = pos
            if any((x + a, y + b, z + c) not in free for a, b, c in mv.footprint):
                continue
            end = (x + mv.shift[0], y + mv.shift[1], z + mv.shift[2])
        out.append((mv, LatticeState(end, mv.vel, mv.acc)))
    return out
