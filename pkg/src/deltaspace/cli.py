"""Command-line entry point: ``deltaspace {plan,bench,genmap,gentasks,presets}``."""

from __future__ import annotations

import argparse
import sys
from importlib import resources
from pathlib import Path

from .bench import (_FIELD_PARSERS, MethodSpec, ScenarioError, TaskGenerationError,
                    generate_tasks, load_scenario, parse_scenario, run_scenario, write_csv)
from .grid_map import MapFormatError, generate_random_map, generate_ucorridor_map, load_map, save_map
from .heuristics import Heuristic, bind, load_profile_table
from .lattice import make_state
from .lowdim import NoPath, build_delta_space
from .planner import Limits, NoSolution, plan, plan_anytime, save_trajectory
from .search_space import DeltaSearchSpace, FullSpace, tunnel_from_delta

# scenario keys that can be overridden from the command line
LATTICE_KEYS = ("order", "dims", "rho", "tau", "v_max", "a_max", "u_max", "du", "resolution")
LIMIT_KEYS = ("max_expansions", "max_time", "budget", "max_reexpansions")


def preset_names() -> list:
    root = resources.files("deltaspace") / "presets"
    return sorted(p.name[:-len(".scenario")] for p in root.iterdir()
                  if p.name.endswith(".scenario"))


def resolve_scenario(name: str) -> Path:
    """A scenario path, or the name of a shipped preset."""
    p = Path(name)
    if p.exists():
        return p
    stem = name[:-len(".scenario")] if name.endswith(".scenario") else name
    if stem in preset_names():
        return Path(str(resources.files("deltaspace") / "presets" / f"{stem}.scenario"))
    raise ScenarioError(f"no scenario file or preset named {name!r} "
                        f"(presets: {', '.join(preset_names())})")


def _add_keys(p: argparse.ArgumentParser, keys):
    for k in keys:
        p.add_argument("--" + k.replace("_", "-"), dest=k, metavar=k.upper())


def _overrides(args, keys) -> dict:
    out = {}
    for k in keys:
        v = getattr(args, k, None)
        if v is not None:
            out[k] = _FIELD_PARSERS[k](v)
    return out


def _out(path):
    return sys.stdout if path in (None, "-") else open(path, "w")


def cmd_plan(args) -> int:
    grid = load_map(args.map)
    base = load_scenario(resolve_scenario(args.scenario)) if args.scenario else parse_scenario("")
    values = {k: getattr(base, k) for k in LATTICE_KEYS + LIMIT_KEYS}
    values.update(_overrides(args, LATTICE_KEYS + LIMIT_KEYS))
    # the map decides dimension and resolution
    values["dims"] = grid.ndim
    values["resolution"] = grid.resolution
    sc = parse_scenario("", **values)
    cfg = sc.config
    start_cell, goal_cell = tuple(args.start), tuple(args.goal)
    method = MethodSpec.parse(args.method)
    heur = Heuristic(args.heuristic, args.weight)
    table = load_profile_table(Path(args.table).read_text(), cfg) if args.table else None
    start = make_state(start_cell, order=cfg.order)
    try:
        if method.name == "delta_anytime":
            d0, step = method.values[:2]
            dmax = method.values[2] if len(method.values) > 2 else None
            traj, st = plan_anytime(grid, start, goal_cell, cfg, d0, step, heur, budget=sc.budget,
                                    delta_max=dmax, limits=sc.limits, table=table,
                                    max_reexpansions=sc.max_reexpansions)
        else:
            delta = method.values[0] if method.name == "delta" else 0.0
            ds = build_delta_space(grid, start_cell, goal_cell, delta)
            space = {"delta": lambda: DeltaSearchSpace(ds),
                     "tunnel": lambda: tunnel_from_delta(ds, method.values[0] if method.values else 0),
                     "full": lambda: FullSpace(grid)}[method.name]()
            h = bind(heur, cfg, goal_cell, grid, ds=ds, table=table)
            traj, _, st = plan(grid, space, start, goal_cell, cfg, h, sc.limits,
                               max_reexpansions=sc.max_reexpansions)
    except (NoPath, NoSolution) as e:
        print(f"no trajectory: {e}", file=sys.stderr)
        return 1
    if traj is None:
        print(f"no trajectory ({st.status}, {st.expansions} expansions)", file=sys.stderr)
        return 1
    with _out(args.output) as f:
        save_trajectory(traj, f, grid)
    print(f"cost {traj.total_cost:.6g}  duration {traj.duration:.6g} s  "
          f"expansions {st.expansions}", file=sys.stderr)
    return 0


def cmd_bench(args) -> int:
    overrides = _overrides(args, LATTICE_KEYS + LIMIT_KEYS + ("count", "seed", "methods",
                                                              "heuristics", "weights"))
    sc = load_scenario(resolve_scenario(args.scenario), **overrides)

    def progress(row):
        if args.verbose:
            print(f"task {row.task_id} {row.method}:{row.param} {row.heuristic} w={row.weight} "
                  f"{'ok' if row.success else 'FAIL'} {row.expansions} exp", file=sys.stderr)

    result = run_scenario(sc, progress=progress)
    with _out(args.output) as f:
        write_csv(result, f, include_aggregates=not args.no_aggregate)
    if result.violations:
        print(f"warning: {result.violations} trajectory cells outside their search space",
              file=sys.stderr)
        return 2
    return 0


def cmd_genmap(args) -> int:
    if args.ucorridor:
        dims = tuple(args.dims or (28, 20))
        res = args.resolution or 0.5
        if len(dims) != 2:
            print("error: U-corridor maps are 2D", file=sys.stderr)
            return 2
        grid, s, g = generate_ucorridor_map(args.seed, dims, res)
        print(f"task = {' '.join(map(str, (*s, *g)))}", file=sys.stderr)
    else:
        grid = generate_random_map(args.seed, tuple(args.dims or (30, 30)), args.resolution or 1.0,
                                   args.density)
    with _out(args.output) as f:
        save_map(grid, f)
    return 0


def cmd_gentasks(args) -> int:
    grid = load_map(args.map)
    tasks = generate_tasks(grid, args.count, args.seed)
    with _out(args.output) as f:
        for s, g in tasks:
            f.write("task = " + " ".join(str(x) for x in (*s, *g)) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="deltaspace",
                                 description="Kinodynamic lattice planning in delta-spaces.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="plan one task and write the trajectory")
    p.add_argument("--map", required=True)
    p.add_argument("--start", type=int, nargs="+", required=True, metavar="I")
    p.add_argument("--goal", type=int, nargs="+", required=True, metavar="I")
    p.add_argument("--scenario", help="take lattice parameters from a scenario file or preset")
    p.add_argument("--method", default="delta:2.0",
                   help="full | tunnel:R | delta:DELTA | delta_anytime:D0/STEP[/DMAX]")
    p.add_argument("--heuristic", default="delta_distance",
                   choices=["zero", "straight_line", "delta_distance", "velocity_profile"])
    p.add_argument("--weight", type=float, default=1.0)
    p.add_argument("--table", help="velocity-profile table file")
    p.add_argument("-o", "--output", help="trajectory file (default: stdout)")
    _add_keys(p, LATTICE_KEYS + LIMIT_KEYS)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("bench", help="run a scenario sweep and write CSV")
    p.add_argument("scenario", help="scenario file or preset name")
    p.add_argument("-o", "--output", help="CSV file (default: stdout)")
    p.add_argument("--no-aggregate", action="store_true", help="omit the aggregate rows")
    p.add_argument("-v", "--verbose", action="store_true")
    _add_keys(p, LATTICE_KEYS + LIMIT_KEYS + ("count", "seed", "methods", "heuristics", "weights"))
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("genmap", help="write a random map")
    p.add_argument("--dims", type=int, nargs="+",
                   help="cells per axis (default 30 30, or 28 20 with --ucorridor)")
    p.add_argument("--density", type=float, default=0.2)
    p.add_argument("--resolution", type=float,
                   help="meters per cell (default 1.0, or 0.5 with --ucorridor)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ucorridor", action="store_true",
                   help="U-corridor map; its task is printed to stderr")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_genmap)

    p = sub.add_parser("gentasks", help="write random start/goal pairs for a map")
    p.add_argument("--map", required=True)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_gentasks)

    p = sub.add_parser("presets", help="list shipped scenario presets")
    p.set_defaults(func=lambda a: print("\n".join(preset_names())) or 0)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, MapFormatError, TaskGenerationError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
