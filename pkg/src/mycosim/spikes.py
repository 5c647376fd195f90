"""
Spike detection and spike-train statistics for simulated or logged potentials.

Peaks are local maxima (plateaus included, reported at their left-most
sample; the first and last samples never qualify) whose topographic
prominence reaches ``prominence_min``. Prominence is the peak height above
the higher of the two minima found by walking left and right from the peak
until a strictly higher sample or the trace end. This is the convention of
``scipy.signal.find_peaks``, which performs the computation.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import median_filter
from scipy.signal import find_peaks

from .errors import LoggerCSVError, SpikeInputError

PROMINENCE = 0.03


@dataclass
class SpikeTrain:
    source: str
    spike_times: np.ndarray
    amplitudes: np.ndarray
    prominences: np.ndarray
    indices: np.ndarray = field(default=None, repr=False)

    def __len__(self):
        return len(self.spike_times)

    @classmethod
    def from_times(cls, times, source=""):
        """A train with known event times and no waveform information."""
        t = np.asarray(sorted(times), dtype=float)
        if np.any(np.diff(t) <= 0):
            raise SpikeInputError("spike times must be distinct")
        nan = np.full(t.shape, np.nan)
        return cls(source, t, nan, nan.copy())


def remove_baseline(trace, window):
    """Subtract a moving median of ``window`` samples."""
    x = np.asarray(trace, dtype=float)
    return x - median_filter(x, size=int(window), mode="nearest")


def detect_spikes(trace, prominence_min=PROMINENCE, times=None, source="",
                  prominence_band=None, baseline_window=None):
    """Find spikes in a sampled trace.

    Parameters
    ----------
    trace : sequence of float, length >= 3
    prominence_min : float
        Smallest accepted prominence, in trace units.
    times : sequence of float, optional
        Sample times; spike times are sample indices when omitted.
    prominence_band : (low, high), optional
        Extra filter keeping spikes with ``low <= prominence <= high``
        (either bound may be None).
    baseline_window : int, optional
        If set, a moving median of this many samples is subtracted first.
    """
    x = np.asarray(trace, dtype=float)
    if x.ndim != 1 or x.size < 3:
        raise SpikeInputError("trace must be one-dimensional with at least 3 samples")
    if baseline_window:
        x = remove_baseline(x, baseline_window)
    _, props = find_peaks(x, prominence=prominence_min, plateau_size=1)
    idx = props["left_edges"].astype(np.int64)
    prom = props["prominences"]
    if prominence_band is not None:
        low, high = prominence_band
        keep = np.ones(idx.size, dtype=bool)
        if low is not None:
            keep &= prom >= low
        if high is not None:
            keep &= prom <= high
        idx, prom = idx[keep], prom[keep]
    if times is None:
        t = idx.astype(float)
    else:
        times = np.asarray(times, dtype=float)
        if times.shape != x.shape:
            raise SpikeInputError("times and trace lengths differ")
        t = times[idx]
    return SpikeTrain(source, t, x[idx], prom, idx)


def inter_spike_intervals(train):
    t = np.asarray(train.spike_times if isinstance(train, SpikeTrain) else train, dtype=float)
    if t.size < 2:
        return np.empty(0)
    return np.diff(t)


def bin_index(values, width):
    """Bin ``k`` with ``k*width <= value < (k+1)*width``, robust to rounding."""
    values = np.asarray(values, dtype=float)
    k = np.floor(values / width).astype(np.int64)
    k += ((k + 1) * width <= values)
    k -= (k * width > values)
    return k


@dataclass
class Histogram:
    bin_width: float
    bin_starts: np.ndarray
    counts: dict  # condition -> int array aligned with bin_starts

    def write_csv(self, path):
        names = list(self.counts)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["bin_start"] + names)
            for k, start in enumerate(self.bin_starts):
                w.writerow([repr(float(start))] + [int(self.counts[n][k]) for n in names])


def isi_histogram(durations, bin_width, n_bins=None):
    """Histogram over half-open bins ``[k*w, (k+1)*w)``.

    ``durations`` is either one sequence or a mapping ``condition -> sequence``;
    all conditions share the same bins so they can be overlaid.
    """
    if not bin_width > 0:
        raise ValueError("bin_width must be positive")
    groups = dict(durations) if isinstance(durations, dict) else {"count": durations}
    groups = {k: np.asarray(v, dtype=float) for k, v in groups.items()}
    for name, d in groups.items():
        if np.any(d < 0):
            raise ValueError(f"negative duration in {name!r}")
    if n_bins is None:
        top = max((int(bin_index(d, bin_width).max()) for d in groups.values() if d.size), default=-1)
        n_bins = top + 1
    counts = {}
    for name, d in groups.items():
        k = bin_index(d, bin_width)
        if k.size and k.max() >= n_bins:
            raise ValueError(f"durations in {name!r} exceed {n_bins} bins")
        counts[name] = np.bincount(k, minlength=n_bins).astype(np.int64)
    return Histogram(bin_width, np.arange(n_bins) * bin_width, counts)


# -- windows ----------------------------------------------------------------------

def parse_windows(text):
    """``"before=0:1800,during=1800:3600"`` -> ``[("before", 0.0, 1800.0), ...]``."""
    out = []
    for item in text.split(","):
        label, _, span = item.strip().partition("=")
        start, _, end = span.partition(":")
        try:
            out.append((label.strip(), float(start), float(end)))
        except ValueError:
            raise ValueError(f"bad window {item!r}; expected label=start:end") from None
    return out


def check_windows(windows):
    for label, start, end in windows:
        if not end > start:
            raise ValueError(f"window {label!r} is empty")
    ordered = sorted(windows, key=lambda w: w[1])
    for (la, _, ea), (lb, sb, _) in zip(ordered, ordered[1:]):
        if sb < ea:
            raise ValueError(f"windows {la!r} and {lb!r} overlap")


@dataclass
class WindowReport:
    labels: list
    rows: dict = field(default_factory=dict)  # channel -> list of counts

    def write_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["channel"] + list(self.labels))
            for channel, counts in self.rows.items():
                w.writerow([channel] + list(counts))


def count_in_windows(train, windows, report=None):
    """Count spikes with ``start <= t < end`` for each labelled window.

    Adds one row (keyed by ``train.source``) to ``report``, creating it if needed.
    """
    check_windows(windows)
    t = np.asarray(train.spike_times, dtype=float)
    counts = [int(np.count_nonzero((t >= s) & (t < e))) for _, s, e in windows]
    if report is None:
        report = WindowReport([w[0] for w in windows])
    report.rows[train.source] = counts
    return report


# -- logger files -----------------------------------------------------------------

@dataclass
class ChannelLog:
    label: str
    sample_rate: float
    values: np.ndarray  # mV
    times: np.ndarray  # s


def load_logger_csv(path):
    """Read a logger export: ``time_s,<channel>,<channel>,...`` with a header row."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if any(cell.strip() for cell in r)]
    if not rows:
        raise LoggerCSVError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if len(header) < 2 or not all(header):
        raise LoggerCSVError(f"{path}: header must name a time column and at least one channel")
    if len(set(header)) != len(header):
        raise LoggerCSVError(f"{path}: duplicate column names in header")
    try:
        float(header[0])
        raise LoggerCSVError(f"{path}: first row is numeric, header missing")
    except ValueError:
        pass
    if len(rows) < 2:
        raise LoggerCSVError(f"{path}: no data rows")
    data = np.empty((len(rows) - 1, len(header)))
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise LoggerCSVError(f"{path}: row {r} has {len(row)} cells, header has {len(header)}")
        for c, cell in enumerate(row):
            try:
                value = float(cell)
            except ValueError:
                raise LoggerCSVError(
                    f"{path}: row {r}, column {c + 1} ({header[c]}): non-numeric value {cell!r}") from None
            if not math.isfinite(value):
                raise LoggerCSVError(f"{path}: row {r}, column {c + 1} ({header[c]}): non-finite value")
            data[r - 2, c] = value
    times = data[:, 0]
    steps = np.diff(times)
    if steps.size and np.any(steps <= 0):
        raise LoggerCSVError(f"{path}: time column must be strictly increasing")
    rate = 1.0 / float(np.median(steps)) if steps.size else 1.0
    return [ChannelLog(header[c], rate, data[:, c].copy(), times.copy()) for c in range(1, len(header))]


def write_logger_csv(path, times, channels):
    """Write ``{label: values}`` in the logger layout (inverse of :func:`load_logger_csv`)."""
    labels = list(channels)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time_s"] + labels)
        for k, t in enumerate(times):
            w.writerow([repr(float(t))] + [repr(float(channels[l][k])) for l in labels])


def write_spikes_csv(train, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time", "amplitude", "prominence"])
        for t, a, p in zip(train.spike_times, train.amplitudes, train.prominences):
            w.writerow([repr(float(t)), repr(float(a)), repr(float(p))])


def amplitude_summary(trains, windows):
    """Rows ``(channel, window, n_spikes, mean_amplitude, mean_prominence)``."""
    out = []
    for train in trains:
        t = np.asarray(train.spike_times)
        for label, s, e in windows:
            sel = (t >= s) & (t < e)
            n = int(sel.sum())
            amp = float(np.mean(train.amplitudes[sel])) if n else float("nan")
            prom = float(np.mean(train.prominences[sel])) if n else float("nan")
            out.append((train.source, label, n, amp, prom))
    return out
