"""Kinodynamic lattice planning in delta-spaces.

A delta-space keeps only grid cells that lie on near-shortest start-goal
paths; the high-dimensional state lattice search is then restricted to
states whose position falls into it.
"""

from .grid_map import (CellState, GridMap, MapFormatError, cell_state, generate_random_map,
                       generate_ucorridor_map, load_map, neighbors, parse_map, save_map)
from .heuristics import (Heuristic, HeuristicKind, VelocityProfileTable, delta_distance_estimate,
                         precompute_profile_table, straight_line_estimate, velocity_profile_estimate)
from .lattice import (BoundExceeded, LatticeConfig, LatticeState, MotionPrimitive, collision_free,
                      integrate, make_primitive, make_state, primitive_cost, project, successors)
from .lowdim import (DeltaSpace, NoPath, NotMember, ResumableSearch, build_delta_space, contains,
                     cost_to_goal, extend_delta_space, run_until_f_exceeds)
from .planner import (Limits, NoSolution, PlannerState, PlanStats, Trajectory, goal_satisfied,
                      plan, plan_anytime, resume)
from .search_space import (DeltaSearchSpace, FullSpace, Membership, TunnelSpace, classify,
                           edge_cost, tunnel_from_delta)

__version__ = "0.1.0"
