"""Tunnel vs. delta-space on one U-corridor map.

The shortest grid path squeezes through a one-cell corridor with a dip in
the middle, so a vehicle planned inside a tunnel around it has to brake
twice. A delta-space of 2 m also contains the wide gap and lets the
planner fly around instead.

    python demos/ucorridor_escape.py [seed]
"""

import sys

from deltaspace import (DeltaSearchSpace, Heuristic, LatticeConfig, build_delta_space,
                        generate_ucorridor_map, make_state, plan, tunnel_from_delta)


def draw(grid, space, traj, start, goal):
    path = set(traj.cells) if traj is not None else set()
    for y in range(grid.dims[1] - 1, -1, -1):
        row = []
        for x in range(grid.dims[0]):
            c = (x, y)
            if c == start:
                row.append("S")
            elif c == goal:
                row.append("G")
            elif grid.occupancy[c]:
                row.append("#")
            elif c in path:
                row.append("*")
            elif space.inside(c):
                row.append("o")
            else:
                row.append(".")
        print("".join(row))


def main(seed=0):
    cfg = LatticeConfig(order=2, rho=10, tau=1.0, v_max=3, u_max=1, du=1, resolution=0.5)
    grid, start, goal = generate_ucorridor_map(seed)
    ds = build_delta_space(grid, start, goal, 2.0)
    heur = Heuristic("delta_distance")
    spaces = {"tunnel r=1.0": tunnel_from_delta(ds, 1.0), "delta 2.0": DeltaSearchSpace(ds)}
    for name, space in spaces.items():
        traj, _, st = plan(grid, space, make_state(start), goal, cfg, heur)
        print(f"\n{name}: {len(space.cells())} cells, cost {st.cost}, "
              f"{st.expansions} expansions, {traj.duration if traj else '-'} s flight")
        draw(grid, space, traj, start, goal)


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 0)
