"""Activity counts, coverage-frequency maps and rendered frames."""
from __future__ import annotations

import csv
import os

import numpy as np
from PIL import Image

from .engine import topology
from .ingest import ConductiveGrid

ACTIVITY_THRESHOLD = 0.1
COVERAGE_THRESHOLD = 0.1
DISPLAY_THRESHOLD = 0.04

# Snapshot palette (8-bit grey levels). Fixed so rendered frames are byte-stable.
BACKGROUND = 255
CONDUCTIVE = 160
EXCITED = 0

FRAME_PATTERN = "frame_{:09d}.png"


def activity(state, threshold=ACTIVITY_THRESHOLD):
    """Number of conductive nodes with u strictly above ``threshold``."""
    return int(np.count_nonzero(state.u_nodes > threshold))


class ActivityRecorder:
    """Run observer collecting ``(iteration, activity)`` pairs."""

    def __init__(self, every=100, threshold=ACTIVITY_THRESHOLD):
        self.every = every
        self.threshold = threshold
        self.iterations = []
        self.counts = []

    def __call__(self, state):
        self.iterations.append(state.iteration)
        self.counts.append(activity(state, self.threshold))

    def mean_between(self, start, stop):
        """Mean activity over samples with ``start <= iteration <= stop``."""
        it = np.asarray(self.iterations)
        sel = (it >= start) & (it <= stop)
        if not sel.any():
            raise ValueError(f"no activity samples in [{start}, {stop}]")
        return float(np.mean(np.asarray(self.counts)[sel]))

    def write_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iteration", "count"])
            w.writerows(zip(self.iterations, self.counts))


class CoverageMap:
    """Per-node count of iterations in which u exceeded a threshold.

    Usable directly as a run observer; ``every = 1`` so it accumulates at every
    iteration rather than at the sampling cadence. Counts live on conductive
    nodes only, so the support can never leave the mask.
    """

    every = 1

    def __init__(self, grid, threshold=COVERAGE_THRESHOLD):
        if not isinstance(grid, ConductiveGrid):
            grid = ConductiveGrid(grid)
        self.grid = grid
        self.threshold = threshold
        self.node_counts = np.zeros(grid.n_conductive, dtype=np.int64)
        self.n_accumulated = 0

    def __call__(self, state):
        coverage_accumulate(self, state, self.threshold)

    @property
    def mask(self):
        return self.grid.mask

    @property
    def raw_counts(self):
        full = np.zeros(self.grid.shape, dtype=np.int64)
        full.ravel()[topology(self.grid).idx] = self.node_counts
        return full

    @property
    def normalized(self):
        raw = self.raw_counts
        peak = raw.max(initial=0)
        if peak == 0:
            return np.zeros(raw.shape)
        return raw / peak

    def write_csv(self, path):
        """Sparse ``row,col,count`` listing of every conductive node."""
        rr, cc = np.divmod(topology(self.grid).idx, self.grid.cols)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["row", "col", "count"])
            w.writerows(zip(rr.tolist(), cc.tolist(), self.node_counts.tolist()))


def coverage_accumulate(cmap, state, threshold=None):
    if state.grid.shape != cmap.grid.shape:
        raise ValueError(f"coverage map is {cmap.grid.shape}, state is {state.grid.shape}")
    threshold = cmap.threshold if threshold is None else threshold
    cmap.node_counts += state.u_nodes > threshold
    cmap.n_accumulated += 1
    return cmap


def render_snapshot(state, display_threshold=DISPLAY_THRESHOLD):
    """Grey-level frame: background, conductive network, excited sites."""
    mask = state.grid.mask
    img = np.full(mask.shape, BACKGROUND, dtype=np.uint8)
    img[mask] = CONDUCTIVE
    img[mask & (state.u > display_threshold)] = EXCITED
    return img


def render_coverage(cmap):
    """8-bit grey image, ``round(255 * normalized)`` with halves rounded up."""
    return np.floor(255.0 * cmap.normalized + 0.5).astype(np.uint8)


def save_png(img, path):
    Image.fromarray(np.ascontiguousarray(img, dtype=np.uint8)).save(path, format="PNG")


class FrameWriter:
    """Run observer saving ``frame_%09d.png`` snapshots into a directory."""

    def __init__(self, directory, every=100, display_threshold=DISPLAY_THRESHOLD):
        self.directory = directory
        self.every = every
        self.display_threshold = display_threshold
        self.paths = []
        os.makedirs(directory, exist_ok=True)

    def __call__(self, state):
        path = os.path.join(self.directory, FRAME_PATTERN.format(state.iteration))
        save_png(render_snapshot(state, self.display_threshold), path)
        self.paths.append(path)
