import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mycosim.gates import GATE_LABELS, INPUTS, align_events, classify_subset, gate_census, mine_electrode
from mycosim.spikes import SpikeTrain

TABLE = {
    frozenset({"01", "10", "11"}): ("OR", "x+y"),
    frozenset({"01", "11"}): ("SELECT-y", "y"),
    frozenset({"01", "10"}): ("XOR", "x ⊕ y"),
    frozenset({"10", "11"}): ("SELECT-x", "x"),
    frozenset({"01"}): ("NOT-AND", "x̄y"),
    frozenset({"10"}): ("AND-NOT", "xȳ"),
    frozenset({"11"}): ("AND", "xy"),
}


def trains(t01=(), t10=(), t11=()):
    return {"01": list(t01), "10": list(t10), "11": list(t11)}


def test_truth_table_is_exact_and_bijective():
    subsets = [frozenset(c) for r in (1, 2, 3) for c in itertools.combinations(INPUTS, r)]
    assert len(subsets) == 7
    got = {s: classify_subset(s) for s in subsets}
    assert got == TABLE
    assert len({label for label, _ in got.values()}) == 7


def test_truth_table_semantics():
    # x is the E1 bit, y the E2 bit; a gate's subset is where f(x, y) = 1
    funcs = {"OR": lambda x, y: x | y, "SELECT-y": lambda x, y: y, "XOR": lambda x, y: x ^ y,
             "SELECT-x": lambda x, y: x, "NOT-AND": lambda x, y: (1 - x) & y,
             "AND-NOT": lambda x, y: x & (1 - y), "AND": lambda x, y: x & y}
    for subset, (label, _) in TABLE.items():
        on = frozenset(p for p in INPUTS if funcs[label](int(p[0]), int(p[1])))
        assert on == subset
        assert funcs[label](0, 0) == 0


def test_classify_errors():
    with pytest.raises(ValueError):
        classify_subset(set())
    with pytest.raises(ValueError):
        classify_subset({"00"})


def test_align_examples():
    assert align_events(trains([500])) == [(500.0, frozenset({"01"}))]
    assert align_events(trains([500], [650])) == [(500.0, frozenset({"01", "10"}))]
    assert align_events(trains([500], [800])) == []
    # window is measured from the cluster's first spike
    assert align_events(trains([500], [699])) == [(500.0, frozenset({"01", "10"}))]
    assert align_events(trains([500], [700])) == []
    # separation counts from the previous cluster's last spike
    assert align_events(trains([0, 150], [], [1151])) == [(0.0, frozenset({"01"})), (1151.0, frozenset({"11"}))]
    assert align_events(trains([0, 150], [], [1150])) == []


def test_align_accepts_spike_trains_and_rejects_missing():
    ev = align_events({"01": SpikeTrain.from_times([5]), "10": SpikeTrain.from_times([]),
                       "11": SpikeTrain.from_times([90])})
    assert ev == [(5.0, frozenset({"01", "11"}))]
    with pytest.raises(ValueError):
        align_events({"01": []})


times = st.lists(st.integers(0, 20000), max_size=12, unique=True)


@settings(max_examples=300, deadline=None)
@given(times, times, times)
def test_events_are_increasing_and_separated(a, b, c):
    ev = align_events(trains(sorted(a), sorted(b), sorted(c)))
    ts = [t for t, _ in ev]
    assert all(y - x > 1000 for x, y in zip(ts, ts[1:]))


@settings(max_examples=300, deadline=None)
@given(times, times, times)
def test_swapping_single_inputs_mirrors_gates(a, b, c):
    spikes = {"E1": trains(sorted(a), sorted(b), sorted(c))}
    swapped = {"E1": trains(sorted(b), sorted(a), sorted(c))}
    n, m = gate_census(spikes).totals, gate_census(swapped).totals
    assert n["SELECT-x"] == m["SELECT-y"] and n["SELECT-y"] == m["SELECT-x"]
    assert n["NOT-AND"] == m["AND-NOT"] and n["AND-NOT"] == m["NOT-AND"]
    for g in ("OR", "XOR", "AND"):
        assert n[g] == m[g]


def test_census_examples(tmp_path):
    assert gate_census({"E1": trains(), "E2": trains()}).per_electrode == {}
    spikes = {e: trains([100], [120], [150]) for e in ("E12", "E3", "E8")}
    c = gate_census(spikes)
    assert c.totals["OR"] == 3 and sum(c.totals.values()) == 3
    assert list(c.per_electrode) == ["E3", "E8", "E12"]
    assert c.summary() == "3 OR (x+y) gates realised on electrodes E3, E8, E12."
    c.write_census_csv(tmp_path / "c.csv")
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0] == "electrode," + ",".join(GATE_LABELS)
    assert lines[-1] == "total,3,0,0,0,0,0,0"
    c.write_events_csv(tmp_path / "e.csv")
    assert (tmp_path / "e.csv").read_text().splitlines()[1] == "E3,100.0,01+10+11,OR"


def test_census_counts_events_not_electrodes():
    c = gate_census({"E1": trains([0, 5000], [], [5050])})
    assert c.per_electrode["E1"]["NOT-AND"] == 1 and c.per_electrode["E1"]["SELECT-y"] == 1
    assert [r.gate for r in mine_electrode("E1", trains([0, 5000], [], [5050]))] == ["NOT-AND", "SELECT-y"]


def test_census_is_order_independent():
    spikes = {"E2": trains([0], [3000]), "E1": trains([], [], [10])}
    a = gate_census(spikes)
    b = gate_census(dict(reversed(list(spikes.items()))))
    assert a.per_electrode == b.per_electrode and a.records == b.records
