"""
Boolean gates read off spike patterns across three stimulation scenarios.

Inputs are the electrode pair (x, y) = (E1, E2); a scenario is named by its
input bits, so "01" stimulates only E2, "10" only E1 and "11" both. A spike
stands for TRUE. Spikes from the three scenarios that fall within the
simultaneity window are pooled into one event; the set of scenarios taking
part in the event selects the gate. The all-zero input is never stimulated
and is assumed silent, so only the seven gates with f(0, 0) = 0 can appear.
"""
from __future__ import annotations

import csv
from collections import OrderedDict
from dataclasses import dataclass

from .electrodes import natural_key

INPUTS = ("01", "10", "11")

GATES = OrderedDict([
    (frozenset({"01", "10", "11"}), ("OR", "x+y")),
    (frozenset({"01", "11"}), ("SELECT-y", "y")),
    (frozenset({"01", "10"}), ("XOR", "x ⊕ y")),
    (frozenset({"10", "11"}), ("SELECT-x", "x")),
    (frozenset({"01"}), ("NOT-AND", "x̄y")),
    (frozenset({"10"}), ("AND-NOT", "xȳ")),
    (frozenset({"11"}), ("AND", "xy")),
])
GATE_LABELS = tuple(label for label, _ in GATES.values())

SIMULTANEITY_WINDOW = 200
SEPARATION_GAP = 1000


def classify_subset(subset):
    """Return ``(label, expression)`` for a non-empty subset of input pairs."""
    key = frozenset(subset)
    if not key:
        raise ValueError("empty subset: no spikes, no gate")
    if not key <= set(INPUTS):
        raise ValueError(f"unknown input pairs {sorted(key - set(INPUTS))}")
    return GATES[key]


def subset_label(subset):
    return "+".join(s for s in INPUTS if s in subset)


@dataclass(frozen=True)
class GateRecord:
    electrode: str
    event_time: float
    subset: frozenset
    gate: str
    expression: str


def align_events(trains, window=SIMULTANEITY_WINDOW, gap=SEPARATION_GAP):
    """Cluster spikes from all scenarios into separated events.

    ``trains`` maps each input pair to a sequence of spike times (or a
    :class:`SpikeTrain`). Spikes are pooled and swept in time order; a spike
    joins the open cluster when it lies less than ``window`` after the
    cluster's first spike. A cluster survives only if more than ``gap``
    separates it from both neighbouring clusters (last spike to first spike).
    Returns ``[(first spike time, frozenset of contributing inputs), ...]``.
    """
    missing = set(INPUTS) - set(trains)
    if missing:
        raise ValueError(f"missing scenario trains: {sorted(missing)}")
    pooled = []
    for k, name in enumerate(INPUTS):
        times = getattr(trains[name], "spike_times", trains[name])
        pooled.extend((float(t), k, name) for t in times)
    pooled.sort()

    clusters = []  # [first, last, set]
    for t, _, name in pooled:
        if clusters and t - clusters[-1][0] < window:
            clusters[-1][1] = t
            clusters[-1][2].add(name)
        else:
            clusters.append([t, t, {name}])

    events = []
    for k, (first, last, names) in enumerate(clusters):
        if k > 0 and first - clusters[k - 1][1] <= gap:
            continue
        if k + 1 < len(clusters) and clusters[k + 1][0] - last <= gap:
            continue
        events.append((first, frozenset(names)))
    return events


def mine_electrode(electrode, trains, window=SIMULTANEITY_WINDOW, gap=SEPARATION_GAP):
    records = []
    for t, subset in align_events(trains, window, gap):
        label, expr = classify_subset(subset)
        records.append(GateRecord(electrode, t, subset, label, expr))
    return records


@dataclass
class GateCensus:
    per_electrode: dict  # electrode -> {gate label: count}
    records: list

    @property
    def totals(self):
        return {g: sum(row[g] for row in self.per_electrode.values()) for g in GATE_LABELS}

    def write_events_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["electrode", "event_iteration", "subset", "gate"])
            for r in self.records:
                w.writerow([r.electrode, repr(float(r.event_time)), subset_label(r.subset), r.gate])

    def write_census_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["electrode"] + list(GATE_LABELS))
            for eid, row in self.per_electrode.items():
                w.writerow([eid] + [row[g] for g in GATE_LABELS])
            totals = self.totals
            w.writerow(["total"] + [totals[g] for g in GATE_LABELS])

    def summary(self):
        """Plain-text account: how many gates of each kind, and where."""
        lines = []
        for g in GATE_LABELS:
            sites = [eid for eid, row in self.per_electrode.items() if row[g]]
            n = self.totals[g]
            if n == 0:
                continue
            expr = next(e for lab, e in GATES.values() if lab == g)
            lines.append(f"{n} {g} ({expr}) gate{'s' if n != 1 else ''} realised on "
                         f"electrode{'s' if len(sites) != 1 else ''} {', '.join(sites)}.")
        return "\n".join(lines) if lines else "No gates realised."


def gate_census(spikes, window=SIMULTANEITY_WINDOW, gap=SEPARATION_GAP):
    """Mine every electrode; ``spikes`` maps electrode id -> {input pair: train}."""
    per_electrode = OrderedDict()
    records = []
    for eid in sorted(spikes, key=natural_key):
        found = mine_electrode(eid, spikes[eid], window, gap)
        if not found:
            continue
        row = dict.fromkeys(GATE_LABELS, 0)
        for r in found:
            row[r.gate] += 1
        per_electrode[eid] = row
        records.extend(found)
    return GateCensus(per_electrode, records)
