"""Scenario files, task generation and benchmark sweeps with CSV output.

A scenario is a flat ``key = value`` text file (``#`` starts a comment)::

    map = ucorridor          # or random, or a path to a map file
    count = 100
    seed = 0
    order = 2
    rho = 10
    methods = tunnel:1.0, delta:2.0, delta_anytime:1.0/0.5/2.5
    heuristics = straight_line, delta_distance
    weights = 1.0

Every combination of method, heuristic and weight is run on every task.
"""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .grid_map import GridMap, generate_random_map, generate_ucorridor_map, load_map
from .heuristics import Heuristic, HeuristicKind, bind, load_profile_table
from .lattice import LatticeConfig, make_state
from .lowdim import NoPath, build_delta_space
from .planner import Limits, NoSolution, plan, plan_anytime
from .search_space import DeltaSearchSpace, FullSpace, tunnel_from_delta

CSV_COLUMNS = ("task_id", "method", "param", "heuristic", "weight", "success",
               "planning_time_ms", "expansions", "cost", "duration_s", "iterations")
AGGREGATE_ID = "ALL"
METHODS = ("full", "tunnel", "delta", "delta_anytime")


class ScenarioError(ValueError):
    """Malformed or inconsistent scenario."""


class TaskGenerationError(RuntimeError):
    """Not enough connected free space to draw the requested tasks."""


@dataclass(frozen=True)
class MethodSpec:
    """``full``, ``tunnel:r``, ``delta:delta`` or ``delta_anytime:d0/step[/dmax]``."""

    name: str
    values: tuple = ()

    @classmethod
    def parse(cls, text: str) -> "MethodSpec":
        name, _, rest = text.strip().partition(":")
        name = name.strip()
        if name not in METHODS:
            raise ScenarioError(f"unknown method {name!r}")
        try:
            values = tuple(float(x) for x in rest.split("/")) if rest.strip() else ()
        except ValueError:
            raise ScenarioError(f"bad method parameter in {text!r}") from None
        need = {"full": (0, 0), "tunnel": (1, 1), "delta": (1, 1), "delta_anytime": (2, 3)}[name]
        if not need[0] <= len(values) <= need[1]:
            raise ScenarioError(f"method {name} takes {need[0]}-{need[1]} parameters, got {text!r}")
        if any(v < 0 for v in values):
            raise ScenarioError(f"negative method parameter in {text!r}")
        return cls(name, values)

    @property
    def param(self) -> str:
        return "/".join(repr(v) for v in self.values)

    def __str__(self):
        return f"{self.name}:{self.param}" if self.values else self.name


@dataclass
class Scenario:
    map: str = "ucorridor"
    map_dims: tuple = (28, 20)
    map_density: float = 0.2
    map_seed: int = 0
    order: int = 2
    dims: int = 2
    rho: float = 10.0
    tau: float = 1.0
    v_max: float = 3.0
    a_max: float = 1.0
    u_max: float = 1.0
    du: float = 1.0
    resolution: float = 0.5
    methods: tuple = (MethodSpec("delta", (2.0,)),)
    heuristics: tuple = (HeuristicKind.ZERO,)
    weights: tuple = (1.0,)
    max_expansions: Optional[int] = None
    max_time: Optional[float] = None
    budget: float = math.inf
    max_reexpansions: Optional[int] = 1
    tasks: tuple = ()
    count: int = 10
    seed: int = 0
    table: Optional[str] = None
    base_dir: Path = field(default=Path("."), repr=False, compare=False)

    def __post_init__(self):
        self.config  # validates the lattice parameters

    @property
    def config(self) -> LatticeConfig:
        try:
            return LatticeConfig(order=self.order, rho=self.rho, tau=self.tau, v_max=self.v_max,
                                 a_max=self.a_max, u_max=self.u_max, du=self.du, dims=self.dims,
                                 resolution=self.resolution)
        except ValueError as e:
            raise ScenarioError(str(e)) from None

    @property
    def limits(self) -> Limits:
        return Limits(self.max_expansions, self.max_time)


def _ints(text):
    return tuple(int(x) for x in text.replace(",", " ").split())


def _optional(conv):
    def f(text):
        return None if text.strip().lower() in ("none", "inf", "") else conv(text)
    return f


_FIELD_PARSERS = {
    "map": str.strip,
    "map_dims": _ints,
    "map_density": float,
    "map_seed": int,
    "order": int,
    "dims": int,
    "rho": float,
    "tau": float,
    "v_max": float,
    "a_max": float,
    "u_max": float,
    "du": float,
    "resolution": float,
    "methods": lambda t: tuple(MethodSpec.parse(x) for x in t.split(",") if x.strip()),
    "heuristics": lambda t: tuple(HeuristicKind(x.strip()) for x in t.split(",") if x.strip()),
    "weights": lambda t: tuple(float(x) for x in t.split(",") if x.strip()),
    "max_expansions": _optional(int),
    "max_time": _optional(float),
    "budget": lambda t: math.inf if t.strip().lower() in ("none", "inf") else float(t),
    "max_reexpansions": _optional(int),
    "count": int,
    "seed": int,
    "table": _optional(str.strip),
}


def parse_scenario(text: str, base_dir=".", **overrides) -> Scenario:
    """Parse scenario text. ``task = sx sy [sz] gx gy [gz]`` may repeat."""
    values = {}
    tasks = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key = key.strip()
        if not sep:
            raise ScenarioError(f"line {lineno}: expected key = value")
        if key == "task":
            nums = _ints(val)
            if len(nums) % 2:
                raise ScenarioError(f"line {lineno}: task needs start and goal cells")
            half = len(nums) // 2
            tasks.append((nums[:half], nums[half:]))
            continue
        if key not in _FIELD_PARSERS:
            raise ScenarioError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _FIELD_PARSERS[key](val)
        except (ValueError, KeyError) as e:
            raise ScenarioError(f"line {lineno}: bad value for {key}: {e}") from None
    if tasks:
        values["tasks"] = tuple(tasks)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return Scenario(base_dir=Path(base_dir), **values)


def load_scenario(path, **overrides) -> Scenario:
    path = Path(path)
    return parse_scenario(path.read_text(), base_dir=path.parent, **overrides)


def dump_scenario(sc: Scenario) -> str:
    """Inverse of :func:`parse_scenario` (up to formatting)."""
    lines = []
    for f in fields(Scenario):
        if f.name in ("base_dir", "tasks"):
            continue
        v = getattr(sc, f.name)
        if f.name == "map_dims":
            v = " ".join(str(x) for x in v)
        elif f.name == "methods":
            v = ", ".join(str(m) for m in v)
        elif f.name == "heuristics":
            v = ", ".join(h.value for h in v)
        elif f.name == "weights":
            v = ", ".join(repr(w) for w in v)
        lines.append(f"{f.name} = {v}")
    for s, g in sc.tasks:
        lines.append("task = " + " ".join(str(x) for x in (*s, *g)))
    return "\n".join(lines) + "\n"


def generate_tasks(grid: GridMap, count: int, seed: int, max_tries: int = 100) -> list:
    """``count`` random (start, goal) pairs of distinct, connected free cells.

    Deterministic in ``seed``. Disconnected pairs are redrawn, up to
    ``max_tries`` times per task.
    """
    free = grid.free_cells()
    if count <= 0:
        return []
    if len(free) < 2:
        raise TaskGenerationError("map needs at least two free cells")
    rng = np.random.default_rng(seed)
    tasks = []
    for _ in range(count):
        for _ in range(max_tries):
            i, j = rng.choice(len(free), size=2, replace=False)
            s, g = free[i], free[j]
            try:
                build_delta_space(grid, s, g, 0.0)
            except NoPath:
                continue
            tasks.append((s, g))
            break
        else:
            raise TaskGenerationError(f"no connected start/goal pair after {max_tries} draws")
    return tasks


def scenario_tasks(sc: Scenario) -> list:
    """``(task_id, grid, start, goal)`` for every task of the scenario."""
    kind = sc.map.lower()
    if kind == "ucorridor":
        if sc.tasks:
            raise ScenarioError("explicit tasks are not supported with generated U-corridor maps")
        out = []
        for i in range(sc.count):
            grid, s, g = generate_ucorridor_map(sc.seed + i, tuple(sc.map_dims), sc.resolution)
            out.append((i, grid, s, g))
        return out
    if kind == "random":
        grid = generate_random_map(sc.map_seed, tuple(sc.map_dims), sc.resolution, sc.map_density)
    else:
        path = Path(sc.map)
        if not path.is_absolute():
            path = sc.base_dir / path
        grid = load_map(path)
        if abs(grid.resolution - sc.resolution) > 1e-12:
            grid = GridMap(grid.occupancy, sc.resolution, grid.origin)
    if grid.ndim != sc.dims:
        raise ScenarioError(f"map has {grid.ndim} dimensions, scenario says {sc.dims}")
    pairs = [(tuple(s), tuple(g)) for s, g in sc.tasks] or generate_tasks(grid, sc.count, sc.seed)
    for s, g in pairs:
        if not (grid.is_free(s) and grid.is_free(g)):
            raise ScenarioError(f"task {s} -> {g} uses a cell that is not free")
    return [(i, grid, s, g) for i, (s, g) in enumerate(pairs)]


@dataclass
class ResultRow:
    task_id: int
    method: str
    param: str
    heuristic: str
    weight: float
    success: bool
    planning_time_ms: float
    expansions: int
    cost: Optional[float]
    duration_s: Optional[float]
    iterations: int

    @property
    def key(self) -> tuple:
        return (self.method, self.param, self.heuristic, self.weight)


@dataclass
class AggregateRow:
    """Success rate over all tasks; other columns are means over the tasks
    that every method configuration of the sweep solved."""

    method: str
    param: str
    heuristic: str
    weight: float
    success: float
    planning_time_ms: Optional[float]
    expansions: Optional[float]
    cost: Optional[float]
    duration_s: Optional[float]
    iterations: Optional[float]
    task_id: str = AGGREGATE_ID

    @property
    def key(self) -> tuple:
        return (self.method, self.param, self.heuristic, self.weight)


@dataclass
class BenchResult:
    rows: list
    aggregates: list
    # trajectory cells outside the space they were planned in (should stay 0)
    violations: int = 0
    trajectories: dict = field(default_factory=dict, repr=False)


def _run_one(grid, start_cell, goal_cell, sc: Scenario, method: MethodSpec,
             kind: HeuristicKind, weight: float, table):
    """Returns ``(trajectory or None, stats-like dict, space)``; timing covers
    delta-space/tunnel construction and the lattice search."""
    cfg = sc.config
    heur = Heuristic(kind, weight)
    start = make_state(start_cell, order=cfg.order)
    t0 = time.perf_counter()
    if method.name == "delta_anytime":
        d0, step = method.values[:2]
        dmax = method.values[2] if len(method.values) > 2 else None
        try:
            traj, st = plan_anytime(grid, start, goal_cell, cfg, d0, step, heur, budget=sc.budget,
                                    delta_max=dmax, limits=sc.limits, table=table,
                                    max_reexpansions=sc.max_reexpansions)
        except NoSolution:
            return None, time.perf_counter() - t0, 0, 0, None
        return traj, time.perf_counter() - t0, st.expansions, len(st.iterations), \
            DeltaSearchSpace(st.delta_space)

    delta = method.values[0] if method.name == "delta" else 0.0
    ds = build_delta_space(grid, start_cell, goal_cell, delta)
    if method.name == "delta":
        space = DeltaSearchSpace(ds)
    elif method.name == "tunnel":
        space = tunnel_from_delta(ds, method.values[0])
    else:
        space = FullSpace(grid)
    h = bind(heur, cfg, goal_cell, grid, ds=ds, table=table)
    traj, _, st = plan(grid, space, start, goal_cell, cfg, h, sc.limits,
                       max_reexpansions=sc.max_reexpansions)
    return traj, time.perf_counter() - t0, st.expansions, 1, space


def aggregate(rows: list) -> list:
    """One :class:`AggregateRow` per method configuration, in first-seen order."""
    keys = list(dict.fromkeys(r.key for r in rows))
    by_key = {k: [r for r in rows if r.key == k] for k in keys}
    task_ids = sorted({r.task_id for r in rows})
    solved_by_all = [t for t in task_ids
                     if all(any(r.task_id == t and r.success for r in by_key[k]) for k in keys)]
    common = set(solved_by_all)
    out = []
    for k in keys:
        rs = by_key[k]
        ok = [r for r in rs if r.task_id in common]

        def mean(attr):
            return float(np.mean([getattr(r, attr) for r in ok])) if ok else None

        out.append(AggregateRow(*k, success=sum(r.success for r in rs) / len(rs),
                                planning_time_ms=mean("planning_time_ms"),
                                expansions=mean("expansions"), cost=mean("cost"),
                                duration_s=mean("duration_s"), iterations=mean("iterations")))
    return out


def run_scenario(sc: Scenario, keep_trajectories: bool = False, progress=None) -> BenchResult:
    """Run every method configuration on every task of ``sc``.

    A task that fails (no trajectory, limits hit, no grid path) yields a row
    with ``success = False``; the sweep continues.
    """
    table = None
    if sc.table:
        path = Path(sc.table)
        table = load_profile_table((path if path.is_absolute() else sc.base_dir / path).read_text(),
                                   sc.config)
    configs = [(m, h, w) for m in sc.methods for h in sc.heuristics for w in sc.weights]
    rows, trajs = [], {}
    violations = 0
    for task_id, grid, s, g in scenario_tasks(sc):
        for m, kind, w in configs:
            try:
                traj, secs, nexp, iters, space = _run_one(grid, s, g, sc, m, kind, w, table)
            except NoPath:
                traj, secs, nexp, iters, space = None, 0.0, 0, 0, None
            if traj is not None:
                violations += sum(1 for c in traj.cells if not space.inside(c))
            row = ResultRow(task_id, m.name, m.param, kind.value, w, traj is not None,
                            secs * 1000.0, nexp,
                            traj.total_cost if traj is not None else None,
                            traj.duration if traj is not None else None, iters)
            rows.append(row)
            if keep_trajectories and traj is not None:
                trajs[(task_id, *row.key)] = traj
            if progress is not None:
                progress(row)
    rows.sort(key=lambda r: r.task_id)
    return BenchResult(rows, aggregate(rows), violations, trajs)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(result: BenchResult, dest=None, include_aggregates: bool = True) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    items = list(result.rows) + (list(result.aggregates) if include_aggregates else [])
    for r in items:
        w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
    text = buf.getvalue()
    if dest is not None:
        dest.write(text)
    return text


def read_csv(source) -> BenchResult:
    """Parse CSV text written by :func:`write_csv`."""
    text = source.read() if hasattr(source, "read") else source
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
        raise ValueError(f"unexpected CSV header {reader.fieldnames}")

    def opt(x, conv=float):
        return conv(x) if x != "" else None

    rows, aggs = [], []
    for d in reader:
        if d["task_id"] == AGGREGATE_ID:
            aggs.append(AggregateRow(d["method"], d["param"], d["heuristic"], float(d["weight"]),
                                     float(d["success"]), opt(d["planning_time_ms"]),
                                     opt(d["expansions"]), opt(d["cost"]), opt(d["duration_s"]),
                                     opt(d["iterations"])))
        else:
            rows.append(ResultRow(int(d["task_id"]), d["method"], d["param"], d["heuristic"],
                                  float(d["weight"]), d["success"] == "true",
                                  float(d["planning_time_ms"]), int(d["expansions"]),
                                  opt(d["cost"]), opt(d["duration_s"]), int(d["iterations"])))
    return BenchResult(rows, aggs)


def strip_timing(result: BenchResult) -> BenchResult:
    """Copy with wall-time columns zeroed, for determinism checks."""
    return BenchResult([replace(r, planning_time_ms=0.0) for r in result.rows],
                       [replace(a, planning_time_ms=None) for a in result.aggregates],
                       result.violations)
