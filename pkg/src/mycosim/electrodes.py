"""
Virtual electrodes: placement, pressure-like stimulation and potential readout.

Layout file: one electrode per line, ``<id> <row> <col>``; ``#`` starts a comment.

Scenario file: one scenario per line,
``<name> <target ids, comma separated> [amplitude] [radius|auto] [at_iteration]``.
"""
from __future__ import annotations

import csv
import logging
import math
import re
import warnings
from dataclasses import dataclass, field

import numpy as np

from .engine import FieldState, topology
from .errors import ElectrodeError

log = logging.getLogger(__name__)

DEFAULT_RADIUS = 2.0
STIMULUS_TARGET_NODES = 10


def natural_key(label):
    m = re.fullmatch(r"(\D*)(\d+)(.*)", label)
    if m:
        return (m.group(1), int(m.group(2)), m.group(3))
    return (label, -1, "")


def disc_nodes(mask, center, radius):
    """Flat indices (row-major) of conductive nodes y with |y - center| < radius."""
    rows, cols = mask.shape
    r0, c0 = center
    reach = int(math.ceil(radius))
    lo_r, hi_r = max(0, r0 - reach), min(rows, r0 + reach + 1)
    lo_c, hi_c = max(0, c0 - reach), min(cols, c0 + reach + 1)
    rr, cc = np.mgrid[lo_r:hi_r, lo_c:hi_c]
    inside = (rr - r0) ** 2 + (cc - c0) ** 2 < radius * radius
    inside &= mask[lo_r:hi_r, lo_c:hi_c]
    return (rr[inside] * cols + cc[inside]).astype(np.int64)


@dataclass(frozen=True)
class Electrode:
    id: str
    center: tuple
    radius: float = DEFAULT_RADIUS
    footprint: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def n_nodes(self):
        return 0 if self.footprint is None else int(self.footprint.size)


def read_layout(path):
    entries = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ElectrodeError(f"{path}:{lineno}: expected '<id> <row> <col>'")
            try:
                entries.append((parts[0], int(parts[1]), int(parts[2])))
            except ValueError as exc:
                raise ElectrodeError(f"{path}:{lineno}: row/col must be integers") from exc
    return entries


def write_layout(entries, path, header=None):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in header or ():
            fh.write(f"# {line}\n")
        for eid, r, c in entries:
            fh.write(f"{eid} {r} {c}\n")


def place_electrodes(layout, grid, radius=DEFAULT_RADIUS):
    """Build electrodes from ``(id, row, col)`` entries or a layout file path."""
    if isinstance(layout, (str, bytes)) or hasattr(layout, "__fspath__"):
        layout = read_layout(layout)
    seen = set()
    out = []
    for eid, r, c in layout:
        if eid in seen:
            raise ElectrodeError(f"duplicate electrode id {eid!r}")
        seen.add(eid)
        if not (0 <= r < grid.rows and 0 <= c < grid.cols):
            raise ElectrodeError(f"electrode {eid} at ({r}, {c}) lies outside the {grid.rows}x{grid.cols} grid")
        fp = disc_nodes(grid.mask, (r, c), radius)
        if fp.size == 0:
            warnings.warn(f"electrode {eid} at ({r}, {c}) covers no conductive node", stacklevel=2)
        out.append(Electrode(eid, (int(r), int(c)), float(radius), fp))
    return out


def read_potential(state, electrode):
    """Sum of (u - v) over the electrode's conductive footprint."""
    fp = electrode.footprint
    if fp is None or fp.size == 0:
        return 0.0
    pos = topology(state.grid).position[fp]
    return float(np.sum(state.u_nodes[pos] - state.v_nodes[pos]))


# -- stimulation ---------------------------------------------------------------

@dataclass(frozen=True)
class StimulusScenario:
    name: str
    targets: tuple
    amplitude: float = 1.0
    footprint_radius: float | None = None  # None: tuned to hit ~10 nodes
    at_iteration: int = 0

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        if not self.targets:
            raise ElectrodeError(f"scenario {self.name!r} has no target electrodes")
        if self.at_iteration < 0:
            raise ElectrodeError("at_iteration must be >= 0")


def tune_radius(mask, center, target=STIMULUS_TARGET_NODES):
    """Radius whose disc around ``center`` holds a conductive count closest to ``target``.

    Candidate radii sit halfway (in squared distance) between lattice shells;
    ties go to the smaller radius.
    """
    reach = int(math.ceil(math.sqrt(target))) + 8
    fp = disc_nodes(mask, center, reach)
    if fp.size == 0:
        return 1.0
    cols = mask.shape[1]
    r, c = np.divmod(fp, cols)
    d2 = np.sort((r - center[0]) ** 2 + (c - center[1]) ** 2)
    best = None
    for shell in np.unique(d2):
        count = int(np.searchsorted(d2, shell, side="right"))
        score = abs(count - target)
        if best is None or score < best[0]:
            best = (score, shell)
    return math.sqrt(best[1] + 0.5)


def perturbed_nodes(scenario, electrodes, mask):
    """Flat indices the scenario sets, as a sorted union over its targets."""
    by_id = {e.id: e for e in electrodes}
    nodes = []
    for tid in scenario.targets:
        if tid not in by_id:
            raise ElectrodeError(f"scenario {scenario.name!r}: unknown electrode {tid!r}")
        e = by_id[tid]
        radius = scenario.footprint_radius
        if radius is None:
            radius = tune_radius(mask, e.center)
        nodes.append(disc_nodes(mask, e.center, radius))
    return np.unique(np.concatenate(nodes))


def apply_stimulus(state, scenario, electrodes, excitation_threshold=0.13):
    """Return a copy of ``state`` with ``u := amplitude`` around every target."""
    if scenario.amplitude <= excitation_threshold:
        raise ElectrodeError(
            f"amplitude {scenario.amplitude} does not exceed the excitation threshold {excitation_threshold}")
    if state.iteration != scenario.at_iteration:
        raise ElectrodeError(
            f"scenario {scenario.name!r} is scheduled for iteration {scenario.at_iteration}, "
            f"state is at {state.iteration}")
    nodes = perturbed_nodes(scenario, electrodes, state.grid.mask)
    u = state.u_nodes.copy()
    u[topology(state.grid).position[nodes]] = scenario.amplitude
    log.info("scenario %s: perturbed %d nodes", scenario.name, nodes.size)
    return FieldState(state.grid, iteration=state.iteration, u_nodes=u, v_nodes=state.v_nodes.copy())


def read_scenarios(path):
    scenarios = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if not 2 <= len(parts) <= 5:
                raise ElectrodeError(f"{path}:{lineno}: expected '<name> <targets> [amplitude] [radius] [at_iteration]'")
            try:
                amplitude = float(parts[2]) if len(parts) > 2 else 1.0
                radius = None if len(parts) <= 3 or parts[3] == "auto" else float(parts[3])
                at = int(parts[4]) if len(parts) > 4 else 0
            except ValueError as exc:
                raise ElectrodeError(f"{path}:{lineno}: {exc}") from exc
            scenarios.append(StimulusScenario(parts[0], tuple(parts[1].split(",")), amplitude, radius, at))
    return scenarios


# -- recording -------------------------------------------------------------------

@dataclass
class PotentialTrace:
    electrode_id: str
    cadence: int
    iterations: list = field(default_factory=list)
    samples: list = field(default_factory=list)

    def as_array(self):
        return np.asarray(self.samples, dtype=float)


class TraceRecorder:
    """Run observer that samples every electrode at a fixed cadence."""

    def __init__(self, electrodes, every=100):
        self.electrodes = sorted(electrodes, key=lambda e: natural_key(e.id))
        self.every = every
        self.iterations = []
        self.rows = []

    def __call__(self, state):
        self.iterations.append(state.iteration)
        self.rows.append([read_potential(state, e) for e in self.electrodes])

    def traces(self):
        return record_traces(self)


def record_traces(recorder):
    """One :class:`PotentialTrace` per electrode, in natural id order."""
    data = np.asarray(recorder.rows, dtype=float).reshape(len(recorder.iterations), len(recorder.electrodes))
    return [PotentialTrace(e.id, recorder.every, list(recorder.iterations), data[:, k].tolist())
            for k, e in enumerate(recorder.electrodes)]


def differential(a, b):
    """Trace ``a - b``, emulating a bipolar recording channel."""
    if a.iterations != b.iterations:
        raise ValueError("traces are sampled at different iterations")
    return PotentialTrace(f"{a.electrode_id}-{b.electrode_id}", a.cadence, list(a.iterations),
                          (np.asarray(a.samples) - np.asarray(b.samples)).tolist())


def write_traces_csv(traces, path):
    if not traces:
        raise ValueError("no traces to write")
    iterations = traces[0].iterations
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration"] + [t.electrode_id for t in traces])
        for k, it in enumerate(iterations):
            w.writerow([it] + [repr(float(t.samples[k])) for t in traces])


def read_traces_csv(path):
    """Return ``(iterations, {electrode_id: samples})`` from a traces CSV."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ElectrodeError(f"{path}: empty traces file") from None
        if not header or header[0] != "iteration" or len(header) < 2:
            raise ElectrodeError(f"{path}: header must start with 'iteration' followed by electrode ids")
        rows = []
        for lineno, row in enumerate(reader, 2):
            if len(row) != len(header):
                raise ElectrodeError(f"{path}:{lineno}: expected {len(header)} columns, got {len(row)}")
            try:
                rows.append([float(x) for x in row])
            except ValueError as exc:
                raise ElectrodeError(f"{path}:{lineno}: {exc}") from exc
    data = np.asarray(rows, dtype=float).reshape(-1, len(header))
    iterations = data[:, 0].astype(np.int64)
    return iterations, {eid: data[:, k + 1] for k, eid in enumerate(header[1:])}
