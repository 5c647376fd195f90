"""
End-to-end experiment runs: grid, electrodes, one simulation per scenario,
spike analysis, gate mining and a manifest of every artifact written.

Output layout::

    <output_dir>/
      config.json                 resolved configuration
      grid.mycogrid, grid.pgm     conductive matrix
      electrodes.txt              electrode layout used
      scenario_<name>/
        traces.csv activity.csv coverage.png coverage.csv spikes.csv
        final_state.mycostate  frames/frame_%09d.png
      analysis/isi_histogram.csv
      gates/events.csv gates/census.csv gates/summary.txt
      manifest.json               written last
"""
from __future__ import annotations

import json
import logging
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__, data, synthetic
from .config import BUNDLED, file_sha256
from .electrodes import TraceRecorder, apply_stimulus, place_electrodes, write_layout, write_traces_csv
from .engine import init_state, run, save_checkpoint
from .errors import MycoError
from .gates import INPUTS, gate_census
from .ingest import ThresholdRule, ingest, load_image, read_grid, write_grid, write_pgm
from .metrics import ActivityRecorder, CoverageMap, FrameWriter, render_coverage, save_png
from .spikes import SpikeTrain, detect_spikes, inter_spike_intervals, isi_histogram

log = logging.getLogger(__name__)

SMALL_SEED = 7


class StageError(MycoError):
    def __init__(self, stage, cause):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class RunManifest:
    config_hash: str
    version: str = __version__
    status: str = "incomplete"
    artifacts: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    failed_stage: str | None = None
    error: str | None = None

    def to_json(self):
        return json.dumps(self.__dict__, indent=2, sort_keys=True)

    def write(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_json() + "\n")

    @classmethod
    def read(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls(**json.load(fh))

    def checksums(self):
        return {a["path"]: a["sha256"] for a in self.artifacts}

    def verify(self, root):
        """Return a list of problems: missing files or checksum mismatches."""
        problems = []
        for a in self.artifacts:
            p = os.path.join(root, a["path"])
            if not os.path.exists(p):
                problems.append(f"missing {a['path']}")
            elif file_sha256(p) != a["sha256"]:
                problems.append(f"checksum mismatch {a['path']}")
        return problems


# -- building blocks ---------------------------------------------------------------

def small_grid(rows=100, cols=100, seed=SMALL_SEED):
    px = synthetic.make_network_image(3 * rows, 3 * cols, seed=seed, n_seeds=8, step=4.0,
                                      line_width=2, branch_rate=0.12, max_tips=400)
    from .ingest import RgbImage
    grid, _ = ingest(RgbImage(px, f"synthetic-small-{seed}"), rows=rows, cols=cols)
    return grid


def build_grid(cfg):
    if cfg.grid_source == "small":
        return small_grid(cfg.rows, cfg.cols)
    if cfg.grid_source == "grid_file":
        return read_grid(cfg.grid_path)
    path = data.path(data.NETWORK_IMAGE) if cfg.grid_source == BUNDLED else cfg.grid_path
    grid, counts = ingest(load_image(path), cfg.rule, cfg.dilate, cfg.rows, cfg.cols, cfg.transpose)
    log.info("ingest: conductive counts per stage %s", counts)
    return grid


def build_layout(cfg, grid):
    if cfg.layout == BUNDLED:
        from .electrodes import read_layout
        return read_layout(data.path(data.ELECTRODE_LAYOUT))
    if cfg.layout:
        from .electrodes import read_layout
        return read_layout(cfg.layout)
    n = 8 if cfg.grid_source == "small" else 16
    return synthetic.auto_layout(grid, n=n)


@dataclass
class ScenarioResult:
    scenario: object
    traces: list
    activity: ActivityRecorder
    coverage: CoverageMap
    final_state: object
    perturbed: int


def simulate_scenario(grid, electrodes, scenario, params, steps, cadence=100, workers=1,
                      activity_threshold=0.1, coverage_threshold=0.1, frames_dir=None,
                      display_threshold=0.04, extra_observers=()):
    """Rest, stimulate at ``scenario.at_iteration``, integrate to ``steps``."""
    from .electrodes import perturbed_nodes
    recorder = TraceRecorder(electrodes, every=cadence)
    act = ActivityRecorder(every=cadence, threshold=activity_threshold)
    cov = CoverageMap(grid, threshold=coverage_threshold)
    observers = [recorder, act, cov, *extra_observers]
    if frames_dir is not None:
        observers.append(FrameWriter(frames_dir, every=cadence, display_threshold=display_threshold))
    state = init_state(grid)
    state = run(state, params, scenario.at_iteration, observers, every=cadence, workers=workers)
    state = apply_stimulus(state, scenario, electrodes, excitation_threshold=params.a)
    n = int(perturbed_nodes(scenario, electrodes, grid.mask).size)
    state = run(state, params, steps - scenario.at_iteration, observers, every=cadence, workers=workers)
    return ScenarioResult(scenario, recorder.traces(), act, cov, state, n)


def trains_from_traces(traces, prominence):
    out = {}
    for t in traces:
        if len(t.samples) < 3:  # too short to hold an interior peak
            out[t.electrode_id] = SpikeTrain.from_times([], source=t.electrode_id)
        else:
            out[t.electrode_id] = detect_spikes(t.samples, prominence, times=t.iterations, source=t.electrode_id)
    return out


# -- orchestration -----------------------------------------------------------------

class _Run:
    def __init__(self, cfg):
        self.cfg = cfg
        self.root = cfg.output_dir
        self.manifest = RunManifest(cfg.hash())
        self.written = []

    def path(self, *parts):
        p = os.path.join(self.root, *parts)
        os.makedirs(os.path.dirname(p), exist_ok=True)
        self.written.append(p)
        return p

    def stage(self, name, fn, *args):
        t0 = time.perf_counter()
        try:
            return fn(*args)
        except Exception as exc:
            self.manifest.timings[name] = round(time.perf_counter() - t0, 3)
            self.manifest.failed_stage = name
            self.manifest.error = str(exc)
            self.finish("incomplete")
            raise StageError(name, exc) from exc
        finally:
            self.manifest.timings.setdefault(name, round(time.perf_counter() - t0, 3))

    def finish(self, status):
        self.manifest.status = status
        arts = []
        for p in sorted(set(self.written)):
            if os.path.exists(p):
                arts.append({"path": os.path.relpath(p, self.root).replace(os.sep, "/"),
                             "sha256": file_sha256(p), "bytes": os.path.getsize(p)})
        self.manifest.artifacts = arts
        self.manifest.write(os.path.join(self.root, "manifest.json"))


def run_experiment(cfg) -> RunManifest:
    """Run every scenario in ``cfg`` and write all artifacts plus ``manifest.json``.

    On failure the partial artifacts are kept and the manifest is written with
    ``status = "incomplete"`` and the failing stage before the error propagates.
    """
    os.makedirs(cfg.output_dir, exist_ok=True)
    r = _Run(cfg)
    with open(r.path("config.json"), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(cfg.canonical(), fh, indent=2, sort_keys=True, default=list)
        fh.write("\n")

    grid = r.stage("grid", build_grid, cfg)
    write_grid(grid, r.path("grid.mycogrid"))
    write_pgm(grid.mask, r.path("grid.pgm"))

    def _electrodes():
        layout = build_layout(cfg, grid)
        write_layout(layout, r.path("electrodes.txt"))
        return place_electrodes(layout, grid, cfg.electrode_radius)
    electrodes = r.stage("electrodes", _electrodes)

    trains = {}
    for scenario in cfg.scenarios:
        sdir = f"scenario_{scenario.name}"

        def _simulate(scenario=scenario, sdir=sdir):
            frames = os.path.join(r.root, sdir, "frames") if cfg.frames else None
            res = simulate_scenario(grid, electrodes, scenario, cfg.params, cfg.steps, cfg.cadence,
                                    cfg.workers, cfg.activity_threshold, cfg.coverage_threshold,
                                    frames, cfg.display_threshold)
            if frames:
                for name in sorted(os.listdir(frames)):
                    r.written.append(os.path.join(frames, name))
            write_traces_csv(res.traces, r.path(sdir, "traces.csv"))
            res.activity.write_csv(r.path(sdir, "activity.csv"))
            save_png(render_coverage(res.coverage), r.path(sdir, "coverage.png"))
            res.coverage.write_csv(r.path(sdir, "coverage.csv"))
            save_checkpoint(res.final_state, r.path(sdir, "final_state.mycostate"))
            log.info("scenario %s: %d nodes perturbed", scenario.name, res.perturbed)
            return res
        res = r.stage(f"simulate:{scenario.name}", _simulate)

        def _spikes(res=res, sdir=sdir):
            found = trains_from_traces(res.traces, cfg.prominence)
            _write_spike_table(found, r.path(sdir, "spikes.csv"))
            return found
        trains[scenario.name] = r.stage(f"spikes:{scenario.name}", _spikes)

    def _isi():
        durations = {name: np.concatenate([inter_spike_intervals(t) for t in by_el.values()] or [np.empty(0)])
                     for name, by_el in trains.items()}
        isi_histogram(durations, cfg.bin_width).write_csv(r.path("analysis", "isi_histogram.csv"))
    r.stage("isi", _isi)

    if all(name in trains for name in INPUTS):
        def _gates():
            ids = sorted({eid for by_el in trains.values() for eid in by_el})
            census = gate_census({eid: {name: trains[name][eid] for name in INPUTS} for eid in ids},
                                 cfg.window, cfg.gap)
            census.write_events_csv(r.path("gates", "events.csv"))
            census.write_census_csv(r.path("gates", "census.csv"))
            with open(r.path("gates", "summary.txt"), "w", encoding="utf-8", newline="\n") as fh:
                fh.write(census.summary() + "\n")
        r.stage("gates", _gates)

    r.finish("complete")
    return r.manifest


def _write_spike_table(trains, path):
    import csv
    from .electrodes import natural_key
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["electrode", "time", "amplitude", "prominence"])
        for eid in sorted(trains, key=natural_key):
            t = trains[eid]
            for s, a, p in zip(t.spike_times, t.amplitudes, t.prominences):
                w.writerow([eid, repr(float(s)), repr(float(a)), repr(float(p))])


__all__ = ["RunManifest", "StageError", "run_experiment", "simulate_scenario", "build_grid",
           "build_layout", "small_grid", "ThresholdRule"]
