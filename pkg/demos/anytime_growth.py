"""Anytime planning: grow delta in steps and watch the incumbent improve.

    python demos/anytime_growth.py [seed]
"""

import sys

from deltaspace import (DeltaSearchSpace, Heuristic, LatticeConfig, build_delta_space,
                        generate_ucorridor_map, make_state, plan, plan_anytime)


def main(seed=0):
    cfg = LatticeConfig(order=2, rho=10, tau=1.0, v_max=3, u_max=1, du=1, resolution=0.5)
    grid, start, goal = generate_ucorridor_map(seed)
    heur = Heuristic("delta_distance", 1.83)

    traj, stats = plan_anytime(grid, make_state(start), goal, cfg, delta0=0.0, delta_step=0.5,
                               heuristic=heur, delta_max=2.5)
    print("delta  expansions  incumbent cost")
    for it in stats.iterations:
        print(f"{it.delta:5.1f}  {it.expansions:10d}  {it.cost:.1f}")
    print(f"total {stats.expansions} expansions, {stats.promoted} boundary states promoted")

    ds = build_delta_space(grid, start, goal, 2.5)
    _, _, direct = plan(grid, DeltaSearchSpace(ds), make_state(start), goal, cfg, heur)
    print(f"direct plan at delta 2.5: cost {direct.cost:.1f}, {direct.expansions} expansions")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 0)
