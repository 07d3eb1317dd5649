import io
import math

import numpy as np
import pytest

from deltaspace.grid_map import GridMap, generate_random_map, generate_ucorridor_map
from deltaspace.heuristics import Heuristic
from deltaspace.lattice import LatticeConfig, make_state
from deltaspace.lowdim import NoPath, build_delta_space, extend_delta_space
from deltaspace.planner import (LIMIT_EXCEEDED, NO_SOLUTION, SOLVED, Limits, NoSolution,
                                goal_satisfied, load_trajectory, plan, plan_anytime, resume,
                                save_trajectory)
from deltaspace.search_space import DeltaSearchSpace, FullSpace, TunnelSpace, tunnel_from_delta

from oracles import SecondOrderOracle

CFG = LatticeConfig(order=2, rho=10, tau=1, v_max=3, u_max=1, du=1, resolution=0.5)
DD = Heuristic("delta_distance")


def _check_trajectory(traj, grid, goal):
    cfg = traj.config
    assert not any(traj.states[0].vel)
    assert goal_satisfied(traj.states[-1], goal)
    for s, p, s2 in zip(traj.states, traj.primitives, traj.states[1:]):
        assert p.start == s and p.end == s2
        assert all(grid.is_free(c) for c in p.footprint)
    assert traj.duration == pytest.approx(len(traj) * cfg.tau)


def test_goal_satisfied():
    assert goal_satisfied(make_state((2, 3)), (2, 3))
    assert not goal_satisfied(make_state((2, 3), vel=(1, 0)), (2, 3))
    assert not goal_satisfied(make_state((2, 4)), (2, 3))
    assert goal_satisfied(make_state((2, 3), order=3), (2, 3))
    assert not goal_satisfied(make_state((2, 3), acc=(0, 1), order=3), (2, 3))


def test_start_is_goal():
    g = GridMap(np.zeros((4, 4), dtype=bool), 0.5)
    traj, _, st = plan(g, FullSpace(g), make_state((1, 1)), (1, 1), CFG)
    assert st.status == SOLVED and traj.total_cost == 0 and len(traj) == 0


def test_corridor_matches_exhaustive_enumeration():
    cfg = LatticeConfig(rho=10, tau=1, v_max=3, u_max=1, du=1, resolution=1.0)
    g = GridMap(np.zeros((6, 1), dtype=bool), 1.0)
    oracle = SecondOrderOracle(1, 1, 1, 3, 10, 1.0)
    traj, _, st = plan(g, FullSpace(g), make_state((0, 0)), (2, 0), cfg)
    assert st.status == SOLVED
    expect = oracle.optimal_cost(g.occupancy, (0, 0), (2, 0), max_depth=6)
    assert traj.total_cost == pytest.approx(expect, rel=1e-9)
    _check_trajectory(traj, g, (2, 0))


def test_errors_and_statuses():
    g = GridMap(np.zeros((6, 6), dtype=bool), 1.0)
    with pytest.raises(ValueError):
        plan(g, FullSpace(g), make_state((0, 0)), (5, 5), CFG)
    cfg = LatticeConfig(resolution=1.0)
    occ = np.zeros((6, 6), dtype=bool)
    occ[3, :] = True
    walled = GridMap(occ, 1.0)
    traj, _, st = plan(walled, FullSpace(walled), make_state((0, 0)), (5, 5), cfg)
    assert traj is None and st.status == NO_SOLUTION and not st.success
    with pytest.raises(ValueError):
        plan(walled, FullSpace(walled), make_state((3, 0)), (5, 5), cfg)
    traj, _, st = plan(g, FullSpace(g), make_state((0, 0)), (5, 5), cfg,
                       limits=Limits(max_expansions=3))
    assert traj is None and st.status == LIMIT_EXCEEDED and st.expansions == 3


def test_saturated_delta_equals_full():
    for seed in range(5):
        g = generate_random_map(seed, (10, 10), 0.5, 0.15)
        free = g.free_cells()
        rng = np.random.default_rng(seed)
        s, goal = (free[i] for i in rng.choice(len(free), 2, replace=False))
        try:
            ds = build_delta_space(g, s, goal, g.diagonal + 1)
        except NoPath:
            continue
        a, _, sa = plan(g, DeltaSearchSpace(ds), make_state(s), goal, CFG, Heuristic("straight_line"))
        b, _, sb = plan(g, FullSpace(g), make_state(s), goal, CFG, Heuristic("straight_line"))
        assert sa.status == sb.status
        if a is not None:
            assert a.total_cost == b.total_cost


def test_trajectory_stays_in_delta_space():
    g, s, goal = generate_ucorridor_map(3)
    ds = build_delta_space(g, s, goal, 1.0)
    traj, _, st = plan(g, DeltaSearchSpace(ds), make_state(s), goal, CFG, DD)
    assert st.success
    assert all(c in ds for c in traj.cells)
    _check_trajectory(traj, g, goal)


def test_tunnel_keeps_delta_distance_available():
    g, s, goal = generate_ucorridor_map(3)
    ds = build_delta_space(g, s, goal, 1.0)
    tunnel = tunnel_from_delta(ds, 1.0)
    traj, _, st = plan(g, tunnel, make_state(s), goal, CFG, DD)
    assert st.success
    assert all(tunnel.inside(c) for c in traj.cells)
    _check_trajectory(traj, g, goal)
    bare = TunnelSpace(g, tunnel.path, 1.0)
    with pytest.raises(ValueError):
        plan(g, bare, make_state(s), goal, CFG, DD)


def test_resume_unchanged_space_is_noop():
    g, s, goal = generate_ucorridor_map(1)
    ds = build_delta_space(g, s, goal, 1.0)
    space = DeltaSearchSpace(ds)
    traj, ps, st = plan(g, space, make_state(s), goal, CFG, DD)
    traj2, ps2, st2 = resume(ps, g, space, DD)
    assert st2.promoted == 0
    assert traj2 is traj and st2.cost == st.cost


def test_resume_into_wider_space_finds_cheaper_trajectory():
    g, s, goal = generate_ucorridor_map(0)
    ds = build_delta_space(g, s, goal, 0.0)
    space = DeltaSearchSpace(ds)
    narrow, ps, st = plan(g, space, make_state(s), goal, CFG, DD)
    assert st.success
    extend_delta_space(ds, 2.5)
    wide, ps, st2 = resume(ps, g, space, DD)
    assert st2.promoted > 0
    assert wide.total_cost < narrow.total_cost
    direct = build_delta_space(g, s, goal, 2.5)
    ref, _, _ = plan(g, DeltaSearchSpace(direct), make_state(s), goal, CFG, DD)
    assert wide.total_cost <= 1.05 * ref.total_cost
    _check_trajectory(wide, g, goal)


def test_anytime_iterations_and_budget():
    for seed in range(4):
        g, s, goal = generate_ucorridor_map(seed)
        traj, st = plan_anytime(g, make_state(s), goal, CFG, 0.0, 0.5, DD, delta_max=2.5)
        costs = [it.cost for it in st.iterations]
        assert all(b <= a + 1e-9 for a, b in zip(costs, costs[1:]))
        assert st.iterations[-1].delta == pytest.approx(2.5)
        assert traj.total_cost == costs[-1]
        assert st.expansions == sum(it.expansions for it in st.iterations)
        assert all(c in st.delta_space for c in traj.cells)
    traj, st = plan_anytime(g, make_state(s), goal, CFG, 1.0, 0.5, DD, budget=0.0)
    assert len(st.iterations) == 1
    with pytest.raises(ValueError):
        plan_anytime(g, make_state(s), goal, CFG, 1.0, 0.0, DD)


def test_anytime_no_solution():
    g, s, goal = generate_ucorridor_map(0)
    with pytest.raises(NoSolution):
        plan_anytime(g, make_state(s), goal, CFG, 1.0, 1.0, DD, delta_max=1.0,
                     limits=Limits(max_expansions=1))


def test_trajectory_roundtrip():
    g, s, goal = generate_ucorridor_map(2)
    ds = build_delta_space(g, s, goal, 2.0)
    traj, _, _ = plan(g, DeltaSearchSpace(ds), make_state(s), goal, CFG, DD)
    buf = io.StringIO()
    save_trajectory(traj, buf, g)
    data = load_trajectory(io.StringIO(buf.getvalue()))
    assert data["order"] == 2
    assert data["cost"] == traj.total_cost
    assert len(data["segments"]) == len(traj)
    assert len(data["states"]) == len(traj) + 1
    first = data["states"][0]
    assert first[:2] == pytest.approx(g.cell_center(s))
    assert data["states"][-1][2:] == [0.0, 0.0]
    for seg, prim in zip(data["segments"], traj.primitives):
        assert seg[1:3] == list(prim.u) and seg[3] == CFG.tau


def test_reexpansion_limit_irrelevant_for_consistent_heuristic():
    g, s, goal = generate_ucorridor_map(5)
    ds = build_delta_space(g, s, goal, 2.0)
    sl = Heuristic("straight_line")
    costs = []
    for k in (0, 1, None):
        traj, _, st = plan(g, DeltaSearchSpace(ds), make_state(s), goal, CFG, sl, max_reexpansions=k)
        costs.append(traj.total_cost)
    assert costs[0] == costs[1] == costs[2]
    # an inflated heuristic may re-open states, bounded per iteration
    _, ps, st = plan(g, DeltaSearchSpace(ds), make_state(s), goal, CFG, Heuristic("delta_distance", 2.2),
                     max_reexpansions=1)
    assert max(ps.expansion_counts.values()) <= 2


def test_third_order_plan():
    cfg = LatticeConfig(order=3, rho=10, tau=1, v_max=3, a_max=1, u_max=1, du=1, resolution=0.5)
    g = GridMap(np.zeros((10, 8), dtype=bool), 0.5)
    start = make_state((1, 1), order=3)
    traj, _, st = plan(g, FullSpace(g), start, (7, 5), cfg, Heuristic("straight_line"))
    assert st.success
    _check_trajectory(traj, g, (7, 5))
    assert not any(traj.states[-1].acc)
