"""
Excitability sweep: which recovery coupling ``c2`` lets a small local
stimulus launch a wave that survives and crosses an open square domain.

Regimes recorded per value:

``sustained``  activity > 0 at the check step and the front reached all four
               boundary midpoints within the horizon
``partial``    activity > 0 at the check step, some midpoint never reached
``decays``     activity == 0 at the check step
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .engine import FhnParams, FieldState, init_state, run, topology
from .ingest import ConductiveGrid
from .metrics import ACTIVITY_THRESHOLD, COVERAGE_THRESHOLD, ActivityRecorder, CoverageMap

C2_VALUES = (0.015, 0.02, 0.03, 0.04, 0.05)


def central_nodes(shape, n=10):
    """The ``n`` nodes nearest the centre cell; ties broken in row-major order."""
    rows, cols = shape
    cr, cc = rows // 2, cols // 2
    rr, cc_ = np.divmod(np.arange(rows * cols), cols)
    d2 = (rr - cr) ** 2 + (cc_ - cc) ** 2
    return np.sort(np.argsort(d2, kind="stable")[:n])


def boundary_midpoints(shape):
    rows, cols = shape
    return {"top": (0, cols // 2), "bottom": (rows - 1, cols // 2),
            "left": (rows // 2, 0), "right": (rows // 2, cols - 1)}


@dataclass
class SweepRow:
    c2: float
    regime: str
    activity_at_check: int
    reached: tuple
    covered_fraction: float
    steps_run: int


@dataclass
class SweepReport:
    check_step: int
    horizon: int
    rows: list = field(default_factory=list)

    @property
    def sustained(self):
        return [r.c2 for r in self.rows if r.regime == "sustained"]

    def excitable_c2(self, fallback=0.05):
        """First sustained value, else ``fallback``."""
        return self.sustained[0] if self.sustained else fallback

    def write_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["c2", "regime", "activity_at_check", "midpoints_reached", "covered_fraction", "steps_run"])
            for r in self.rows:
                w.writerow([repr(r.c2), r.regime, r.activity_at_check, "|".join(r.reached),
                            repr(round(r.covered_fraction, 6)), r.steps_run])

    def text(self):
        lines = [f"c2 sweep: activity checked at {self.check_step}, reach within {self.horizon}"]
        for r in self.rows:
            lines.append(f"  c2={r.c2:<6} {r.regime:<9} activity={r.activity_at_check:<6} "
                         f"reached={','.join(r.reached) or '-'} covered={r.covered_fraction:.3f}")
        return "\n".join(lines)


def classify(activity_at_check, reached):
    if activity_at_check == 0:
        return "decays"
    return "sustained" if len(reached) == 4 else "partial"


def sweep_one(c2, size=100, stim_nodes=10, amplitude=1.0, check_step=20000, horizon=60000,
              base=None, workers=1):
    base = base or FhnParams()
    params = base.replace(c2=c2)
    grid = ConductiveGrid(np.ones((size, size), dtype=bool), {"source": f"open {size}x{size}"})
    state = init_state(grid)
    u = state.u_nodes.copy()
    u[topology(grid).position[central_nodes(grid.shape, stim_nodes)]] = amplitude
    state = FieldState(grid, iteration=0, u_nodes=u, v_nodes=state.v_nodes.copy())

    act = ActivityRecorder(every=check_step, threshold=ACTIVITY_THRESHOLD)
    cov = CoverageMap(grid, threshold=COVERAGE_THRESHOLD)
    state = run(state, params, check_step, [act, cov], workers=workers)
    at_check = int(act.counts[-1])
    if at_check > 0 and horizon > check_step:
        state = run(state, params, horizon - check_step, [cov], workers=workers)
    raw = cov.raw_counts
    reached = tuple(name for name, (r, c) in boundary_midpoints(grid.shape).items() if raw[r, c] > 0)
    frac = float(np.count_nonzero(cov.node_counts)) / cov.node_counts.size
    return SweepRow(float(c2), classify(at_check, reached), at_check, reached, frac, state.iteration)


def excitability_sweep(c2_values=C2_VALUES, size=100, stim_nodes=10, amplitude=1.0,
                       check_step=20000, horizon=60000, base=None, workers=1):
    """Run one open-domain trial per ``c2`` value and report its regime."""
    report = SweepReport(check_step, horizon)
    for c2 in c2_values:
        report.rows.append(sweep_one(c2, size, stim_nodes, amplitude, check_step, horizon, base, workers))
    return report
