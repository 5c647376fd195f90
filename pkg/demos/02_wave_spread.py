"""
A travelling front on an open square
====================================

Kick a block of nodes on an open 100 x 100 medium and watch the excited
area grow. A small kick dies out; a larger one crosses the domain. The
threshold between the two depends on c2.

    python3 demos/02_wave_spread.py
"""
import numpy as np

from mycosim.calibration import boundary_midpoints, central_nodes
from mycosim.engine import FhnParams, FieldState, init_state, run, topology
from mycosim.ingest import ConductiveGrid
from mycosim.metrics import ActivityRecorder, CoverageMap

grid = ConductiveGrid(np.ones((100, 100), dtype=bool))


def trial(c2, n_kick, steps=20000):
    state = init_state(grid)
    u = state.u_nodes.copy()
    u[topology(grid).position[central_nodes(grid.shape, n_kick)]] = 1.0
    state = FieldState(grid, iteration=0, u_nodes=u, v_nodes=state.v_nodes.copy())
    act = ActivityRecorder(every=2000)
    cov = CoverageMap(grid)
    run(state, FhnParams(c2=c2), steps, [act, cov])
    raw = cov.raw_counts
    reached = [k for k, (r, c) in boundary_midpoints(grid.shape).items() if raw[r, c]]
    return act, cov, reached


for c2 in (0.015, 0.05):
    for n_kick in (10, 40):
        act, cov, reached = trial(c2, n_kick)
        covered = np.count_nonzero(cov.node_counts) / cov.node_counts.size
        print(f"c2={c2:<6} kick={n_kick:3d}  activity@20K={act.counts[-1]:5d}  "
              f"covered={covered:.2f}  edges reached={reached or '-'}")

# Rough front speed from the printed parameters: sqrt(D c1 / 2) (1 - 2a) per unit
# time, in nodes per step after scaling by dt / dx.
p = FhnParams()
speed = np.sqrt(p.D_u * p.c1 / 2) * (1 - 2 * p.a) * p.dt / p.dx
print(f"front speed ~ {speed:.4f} nodes/step, i.e. ~{speed * 1000:.1f} nodes per 1000 steps")
