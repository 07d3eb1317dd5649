import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from deltaspace.grid_map import GridMap
from deltaspace.lattice import (BoundExceeded, LatticeConfig, collision_free, continuous_end,
                                integrate, make_primitive, make_state, motion_table,
                                primitive_cost, project, snap_index, state_from_values,
                                successor_moves, successors)

from oracles import SecondOrderOracle, _nearest_toward_zero, dense_cells


def empty(n=9, res=1.0, ndim=2):
    return GridMap(np.zeros((n,) * ndim, dtype=bool), res)


def test_primitive_cost_values():
    assert primitive_cost((1, 0, 0), 1.0, 10.0) == 11
    assert primitive_cost((0, 0, 0), 1.0, 10.0) == 10
    assert primitive_cost((1, 1), 0.5, 16.0) == 9


def test_config_validation():
    for bad in (dict(order=4), dict(dims=1), dict(tau=0), dict(rho=-1), dict(du=0),
                dict(v_max=0), dict(u_max=0.75, du=0.5), dict(resolution=0)):
        with pytest.raises(ValueError):
            LatticeConfig(**bad)


def test_integrate_second_order():
    cfg = LatticeConfig(order=2, tau=1, du=1, u_max=1, v_max=3, resolution=0.5)
    s = make_state((0, 0))
    end = integrate(s, (1, 0), 1.0, cfg)
    assert end.vel == (1, 0)
    assert continuous_end(s, (1, 0), cfg) - 0.25 == pytest.approx([0.5, 0.0])
    assert end.pos == (1, 0)


def test_integrate_third_order():
    cfg = LatticeConfig(order=3, tau=1, du=1, u_max=1, v_max=3, a_max=1, resolution=1 / 6)
    s = make_state((0, 0), order=3)
    end = integrate(s, (1, 0), 1.0, cfg)
    disp = continuous_end(s, (1, 0), cfg) - 0.5 / 6
    assert disp == pytest.approx([1 / 6, 0.0])
    assert end.pos == (1, 0)
    assert end.vel[0] * cfg.vel_unit == pytest.approx(0.5)
    assert end.acc[0] * cfg.acc_unit == pytest.approx(1.0)


def test_bound_exceeded():
    cfg = LatticeConfig(order=2, tau=1, du=0.5, u_max=1, v_max=3)
    s = state_from_values(cfg, (0, 0), vel=(3.0, 0.0))
    with pytest.raises(BoundExceeded):
        integrate(s, (0.5, 0), 1.0, cfg)
    with pytest.raises(ValueError):
        integrate(s, (0.3, 0), 1.0, cfg)
    with pytest.raises(ValueError):
        integrate(s, (1.5, 0), 1.0, cfg)
    with pytest.raises(ValueError):
        integrate(s, (0, 0), 0.5, cfg)
    cfg3 = LatticeConfig(order=3, tau=1, du=1, u_max=1, v_max=3, a_max=1)
    s3 = make_state((0, 0), acc=(1, 0), order=3)
    with pytest.raises(BoundExceeded):
        integrate(s3, (1, 0), 1.0, cfg3)


def test_state_from_values_rejects_off_lattice():
    cfg = LatticeConfig(du=0.5)
    with pytest.raises(ValueError):
        state_from_values(cfg, (0, 0), vel=(0.3, 0))


def test_input_grid_sizes():
    cfg = LatticeConfig(order=2, tau=1, du=0.5, u_max=1, v_max=3)
    assert len(motion_table(cfg).moves((0, 0))) == 25
    cfg3 = LatticeConfig(order=2, dims=3, tau=0.5, du=2, u_max=2, v_max=4, rho=16, resolution=0.5)
    g = empty(9, 0.5, 3)
    succ = successors(make_state((4, 4, 4)), cfg3, g)
    assert len(succ) == 27
    assert all(collision_free(p, g) for p, _ in succ)


def test_project():
    s = make_state((3, 4), vel=(1, 0))
    assert project(s) == (3, 4)
    assert project(make_state((3, 4), vel=(-2, 1))) == project(s)
    cfg = LatticeConfig()
    rest = make_state((3, 4))
    assert project(integrate(rest, (0, 0), 1.0, cfg)) == project(rest)


def test_collision_free_simple_cases():
    cfg = LatticeConfig(resolution=0.5)
    occ = np.zeros((9, 9), dtype=bool)
    occ[5, 4] = True
    g = GridMap(occ, 0.5)
    s = make_state((4, 4))
    assert collision_free(make_primitive(s, (0, 0), cfg, g), g)
    p = make_primitive(s, (1, 0), cfg, g)
    assert p.end.pos == (5, 4)
    assert not collision_free(p, g)


def test_arc_through_obstacle_between_free_endpoints():
    cfg = LatticeConfig(resolution=0.5, v_max=3)
    oracle = SecondOrderOracle(1, 1, 1, 3, 10, 0.5, n_samples=4000)
    g0 = empty(21, 0.5)
    s = make_state((10, 10), vel=(2, -1))
    found = 0
    for mv in motion_table(cfg).moves(s.vel):
        inner = [o for o in mv.footprint if o not in ((0, 0), mv.shift)]
        if not inner:
            continue
        off = inner[len(inner) // 2]
        occ = np.zeros((21, 21), dtype=bool)
        occ[10 + off[0], 10 + off[1]] = True
        g = GridMap(occ, 0.5)
        p = make_primitive(s, tuple(k * cfg.du for k in mv.k), cfg, g)
        assert g.is_free(p.end.pos) and g.is_free(s.pos)
        assert not collision_free(p, g)
        # the dense oracle also needs that cell
        need = {ks: n for ks, _, _, n, _ in oracle.moves(s.vel)}[mv.k]
        assert off in need
        found += 1
        assert collision_free(make_primitive(s, tuple(k * cfg.du for k in mv.k), cfg, g0), g0)
    assert found > 0


def test_wall_blocks_successors():
    cfg = LatticeConfig(resolution=0.5, v_max=3)
    occ = np.zeros((9, 9), dtype=bool)
    occ[5, :] = True
    g = GridMap(occ, 0.5)
    s = make_state((4, 4))
    succ = successors(s, cfg, g)
    assert len(succ) == 6
    for prim, end in succ:
        assert all(c[0] < 5 for c in prim.footprint)
        assert all(g.cell_of(pt)[0] < 5 for pt in prim.samples)
    # moving at 1 m/s towards the wall already enters it
    assert successors(make_state((4, 4), vel=(1, 0)), cfg, g) == []


def test_successor_moves_agree_with_successors():
    cfg = LatticeConfig(resolution=0.5, v_max=3)
    g = GridMap(np.random.default_rng(1).random((12, 12)) < 0.2, 0.5)
    for c in g.free_cells()[:30]:
        for vel in [(0, 0), (1, -1), (2, 0)]:
            s = make_state(c, vel=vel)
            a = sorted(e for _, e in successor_moves(s, cfg, g))
            b = sorted(e for _, e in successors(s, cfg, g))
            assert a == b


CONFIGS = [(1, 1, 1, 2, 1.0), (1, 1, 1, 3, 0.5), (0.5, 2, 2, 4, 0.5), (1, 1, 1, 3, 0.7),
           (1, 0.5, 1, 2, 0.5)]


@pytest.mark.parametrize("tau,du,u_max,v_max,res", CONFIGS)
def test_footprint_against_dense_oracle(tau, du, u_max, v_max, res):
    """Every densely sampled cell is in the footprint, and the footprint never
    exceeds the dense cells plus their corner padding."""
    cfg = LatticeConfig(tau=tau, du=du, u_max=u_max, v_max=v_max, resolution=res)
    oracle = SecondOrderOracle(tau, du, u_max, v_max, 10, res, n_samples=300)
    nv = cfg.max_vel_index
    for vel in itertools.product(range(-nv, nv + 1), repeat=2):
        ours = {mv.k: mv for mv in motion_table(cfg).moves(vel)}
        theirs = oracle.moves(vel)
        assert set(ours) == {m[0] for m in theirs}
        for ks, v2, end, need, cost in theirs:
            mv = ours[ks]
            assert mv.vel == v2
            assert mv.shift == end
            assert mv.cost == pytest.approx(float(cost), rel=1e-12)
            fp = set(mv.footprint)
            assert set(oracle.trace(vel, ks)) <= fp
            assert fp <= need


def _third_order_offsets(cfg, vel, acc, ks, n):
    t = np.linspace(0, cfg.tau, n + 1)[:, None]
    v = np.asarray(vel) * cfg.vel_unit
    a = np.asarray(acc) * cfg.acc_unit
    u = np.asarray(ks) * cfg.du
    return v * t + a * t ** 2 / 2 + u * t ** 3 / 6


def test_third_order_footprint_covers_dense_samples():
    cfg = LatticeConfig(order=3, tau=1, du=0.5, u_max=1, v_max=3, a_max=1, resolution=0.5)
    table = motion_table(cfg)
    rng = np.random.default_rng(0)
    nv, na = cfg.max_vel_index, cfg.max_acc_index
    checked = 0
    for _ in range(60):
        vel = tuple(int(x) for x in rng.integers(-nv, nv + 1, 2))
        acc = tuple(int(x) for x in rng.integers(-na, na + 1, 2))
        for mv in table.moves(vel, acc):
            cells = dense_cells((0, 0), cfg.resolution,
                                _third_order_offsets(cfg, vel, acc, mv.k, 400))
            assert cells <= set(mv.footprint)
            checked += 1
    assert checked > 100


@settings(max_examples=200, deadline=None)
@given(st.integers(-6, 6), st.integers(-6, 6), st.integers(-2, 2), st.integers(-2, 2),
       st.sampled_from([(1, 1, 1.0), (1, 1, 0.5), (0.5, 2, 0.5), (1, 0.5, 0.25)]))
def test_integrate_matches_exact_closed_form(vx, vy, kx, ky, params):
    tau, du, res = params
    cfg = LatticeConfig(tau=tau, du=du, u_max=2 * du, v_max=6 * du * tau, resolution=res)
    s = make_state((0, 0), vel=(vx, vy))
    try:
        end = integrate(s, (kx * du, ky * du), tau, cfg)
    except BoundExceeded:
        assert max(abs(vx + kx), abs(vy + ky)) > cfg.max_vel_index
        return
    T, D, R = Fraction(str(tau)), Fraction(str(du)), Fraction(str(res))
    for p, v, k, v2 in zip(end.pos, (vx, vy), (kx, ky), end.vel):
        x = v * D * T * T + k * D * T * T / 2
        assert p == _nearest_toward_zero(x / R)
        assert v2 == v + k


@pytest.mark.parametrize("v,k", [(0, 1), (2, -1), (-1, 2), (3, 0)])
def test_reversed_input_restores_velocity(v, k):
    # (u, tau) followed by (-u, tau) moves 2*v*tau + u*tau^2, not 2*v*tau
    cfg = LatticeConfig(tau=1, du=1, u_max=2, v_max=6, resolution=0.5)
    s = make_state((0,), vel=(v,))
    mid = integrate(s, (k,), 1, cfg)
    end = integrate(mid, (-k,), 1, cfg)
    assert end.vel == s.vel
    assert end.pos[0] * cfg.resolution == 2 * v + k


def test_snap_index_ties_toward_zero():
    assert snap_index(0.5) == 0 and snap_index(-0.5) == 0
    assert snap_index(1.5) == 1 and snap_index(-1.5) == -1
    assert snap_index(0.51) == 1 and snap_index(-2.7) == -3


def test_make_primitive_samples_follow_polynomial():
    cfg = LatticeConfig(resolution=0.5)
    g = empty(20, 0.5)
    s = make_state((10, 10), vel=(1, -2))
    p = make_primitive(s, (-1, 1), cfg, g)
    assert p.samples[0] == pytest.approx(g.cell_center(s.pos))
    assert p.samples[-1] == pytest.approx(continuous_end(s, (-1, 1), cfg, g))
    assert p.cost == pytest.approx(12.0)
    assert p.duration == 1.0
    gap = np.linalg.norm(np.diff(p.samples, axis=0), axis=1).max()
    assert gap <= 0.5 * cfg.resolution * math.sqrt(2) + 1e-9
