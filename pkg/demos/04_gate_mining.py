"""
Reading Boolean gates off spike trains
======================================

Input x stimulates E1, input y stimulates E2. For every electrode, spikes
from the three runs (01, 10, 11) are pooled and clustered; each isolated
cluster is labelled by which runs contributed to it.

Part one uses hand-made trains so the outcome is obvious. Part two runs the
small synthetic profile end to end.

    python3 demos/04_gate_mining.py [out_dir]
"""
import os
import sys

from mycosim.config import small_config
from mycosim.experiment import run_experiment
from mycosim.gates import align_events, gate_census

# part one --------------------------------------------------------------------
trains = {
    "E5": {"01": [1000.0, 9000.0], "10": [1050.0, 5000.0], "11": [5100.0]},
    "E6": {"01": [], "10": [], "11": [3000.0, 3150.0]},
}
for eid, by_input in trains.items():
    print(eid, align_events(by_input))

census = gate_census(trains)
print(census.summary())

# part two --------------------------------------------------------------------
out = sys.argv[1] if len(sys.argv) > 1 else "demo-out"
manifest = run_experiment(small_config(os.path.join(out, "small"), env={}))
print(manifest.status, "-", len(manifest.artifacts), "artifacts")
with open(os.path.join(out, "small", "gates", "summary.txt")) as fh:
    print(fh.read().strip())
