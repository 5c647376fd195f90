"""Regenerate the files in src/mycosim/data/.

Everything is deterministic; rerunning this script reproduces the bundled
files byte for byte.

    python3 demos/make_bundled_data.py [--check]
"""
import argparse
import filecmp
import os
import shutil
import sys
import tempfile

from mycosim import data, synthetic
from mycosim.config import STANDARD_SCENARIOS
from mycosim.electrodes import write_layout
from mycosim.ingest import RgbImage, ingest
from mycosim.spikes import write_logger_csv

# Inputs x = E1 in the dense forefoot, y = E2 in the sparse heel. The other
# fourteen electrodes follow the insole edge (automatic arc, renumbered).
E1 = (158, 894)
E2 = (212, 103)

EXPERIMENT_INI = """\
# Three-scenario study on the bundled reconstructed insole network.
[grid]
image = bundled
rows = 364
cols = 985
dilate = 1
transpose = auto

[fhn]
c2 = 0.05

[electrodes]
layout = bundled
radius = 2

[scenario 01]
targets = E2

[scenario 10]
targets = E1

[scenario 11]
targets = E1, E2

[run]
steps = 60000
cadence = 100
output_dir = mycosim-out
frames = no

[analysis]
prominence = 0.03
window = 200
gap = 1000
bin_width = 1000
"""


def insole_layout(grid):
    arc = [(r, c) for _, r, c in synthetic.auto_layout(grid, n=16)]
    rest = [p for p in arc if p not in (E1, E2)]
    points = [E1, E2] + rest[:14]
    return [(f"E{k + 1}", r, c) for k, (r, c) in enumerate(points)]


def build(out):
    px = synthetic.make_network_image()
    synthetic.save_rgb_png(px, os.path.join(out, data.NETWORK_IMAGE))
    grid, _ = ingest(RgbImage(px, data.NETWORK_IMAGE))
    write_layout(insole_layout(grid), os.path.join(out, data.ELECTRODE_LAYOUT), header=[
        "reconstructed 16-electrode layout for insole_network.png on the 364x985 grid",
        "the original electrode coordinates are not published",
        "id row col"])
    with open(os.path.join(out, data.SCENARIOS), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# name targets amplitude radius at_iteration\n")
        for s in STANDARD_SCENARIOS:
            fh.write(f"{s.name} {','.join(s.targets)} {s.amplitude} auto {s.at_iteration}\n")
    times, values, _ = synthetic.make_logger_fixture()
    write_logger_csv(os.path.join(out, data.LOGGER_FIXTURE), times, values)
    with open(os.path.join(out, data.EXPERIMENT), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(EXPERIMENT_INI)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--check", action="store_true", help="only compare against the installed files")
    args = p.parse_args(argv)
    target = os.path.dirname(data.__file__)
    names = [data.NETWORK_IMAGE, data.ELECTRODE_LAYOUT, data.SCENARIOS, data.LOGGER_FIXTURE, data.EXPERIMENT]
    with tempfile.TemporaryDirectory() as tmp:
        build(tmp)
        if args.check:
            bad = [n for n in names if not filecmp.cmp(os.path.join(tmp, n), os.path.join(target, n), shallow=False)]
            print("up to date" if not bad else "differs: " + ", ".join(bad))
            return 1 if bad else 0
        for n in names:
            shutil.copyfile(os.path.join(tmp, n), os.path.join(target, n))
            print("wrote", os.path.join(target, n))
    return 0


if __name__ == "__main__":
    sys.exit(main())
