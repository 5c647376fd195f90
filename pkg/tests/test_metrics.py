import numpy as np
import pytest
from PIL import Image

from mycosim.engine import FhnParams, FieldState, init_state, run
from mycosim.metrics import (BACKGROUND, CONDUCTIVE, EXCITED, ActivityRecorder, CoverageMap, FrameWriter,
                             activity, coverage_accumulate, render_coverage, render_snapshot, save_png)

from conftest import make_grid


def field(grid, u):
    u = np.asarray(u, dtype=float)
    return FieldState(grid, u, np.zeros_like(u))


def test_activity_examples():
    g = make_grid(np.ones((4, 4), bool))
    assert activity(init_state(g)) == 0
    u = np.zeros((4, 4))
    u[0, :3] = 0.5
    assert activity(field(g, u)) == 3
    u[3, 3] = 0.1
    assert activity(field(g, u)) == 3


def test_activity_monotone_in_threshold(rng):
    g = make_grid(rng.random((10, 10)) < 0.7)
    s = field(g, np.where(g.mask, rng.random((10, 10)), 0))
    counts = [activity(s, t) for t in np.linspace(0, 1, 21)]
    assert all(a >= b for a, b in zip(counts, counts[1:]))


def test_coverage_counts_scripted_sequence():
    g = make_grid(np.ones((1, 2), bool))
    cmap = CoverageMap(g)
    for k in range(10):
        coverage_accumulate(cmap, field(g, [[0.5 if k < 7 else 0.0, 0.0]]))
    assert cmap.raw_counts.tolist() == [[7, 0]]
    assert cmap.normalized.tolist() == [[1.0, 0.0]]
    assert cmap.n_accumulated == 10


def test_coverage_empty_and_mismatch():
    g = make_grid(np.ones((3, 3), bool))
    cmap = CoverageMap(g)
    run(init_state(g), FhnParams(), 20, [cmap])
    assert not cmap.raw_counts.any() and not cmap.normalized.any()
    assert not render_coverage(cmap).any()
    with pytest.raises(ValueError):
        coverage_accumulate(cmap, init_state(make_grid(np.ones((2, 2), bool))))


def test_coverage_support_inside_mask(rng):
    mask = rng.random((12, 12)) < 0.6
    g = make_grid(mask)
    cmap = CoverageMap(g)
    u = np.where(mask, 1.0, 0.0)
    run(field(g, u), FhnParams(), 30, [cmap])
    assert not cmap.raw_counts[~mask].any()
    assert cmap.raw_counts.max() <= cmap.n_accumulated == 30


def test_render_coverage_rounding():
    g = make_grid(np.ones((1, 3), bool))
    cmap = CoverageMap(g)
    cmap.node_counts[:] = [0, 1, 2]
    assert render_coverage(cmap).tolist() == [[0, 128, 255]]


def test_snapshot_palette_and_activity_cross_check(rng):
    mask = rng.random((15, 15)) < 0.6
    g = make_grid(mask)
    s = field(g, np.where(mask, rng.random((15, 15)) * 0.1, 0))
    img = render_snapshot(s)
    assert set(np.unique(img)) <= {BACKGROUND, CONDUCTIVE, EXCITED}
    assert np.count_nonzero(img == EXCITED) == activity(s, 0.04)
    assert np.all(img[~mask] == BACKGROUND)
    full = render_snapshot(field(g, np.where(mask, 1.0, 0.0)))
    assert np.array_equal(full == EXCITED, mask)


def test_activity_recorder_and_csv(tmp_path):
    g = make_grid(np.ones((5, 5), bool))
    rec = ActivityRecorder(every=10)
    u = np.full((5, 5), 0.9)
    run(field(g, u), FhnParams(), 50, [rec])
    assert rec.iterations == [10, 20, 30, 40, 50]
    assert rec.mean_between(20, 40) == 25
    rec.write_csv(tmp_path / "a.csv")
    assert (tmp_path / "a.csv").read_text().splitlines()[:2] == ["iteration,count", "10,25"]


def test_frames_are_numbered_and_stable(tmp_path):
    g = make_grid(np.ones((6, 6), bool))
    u = np.zeros((6, 6))
    u[2:4, 2:4] = 1.0
    for d in ("a", "b"):
        run(field(g, u), FhnParams(), 200, [FrameWriter(tmp_path / d, every=100)])
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert names == ["frame_000000100.png", "frame_000000200.png"]
    for n in names:
        assert (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes()
    assert Image.open(tmp_path / "a" / names[0]).mode == "L"


def test_save_png_round_trip(tmp_path):
    img = np.arange(12, dtype=np.uint8).reshape(3, 4)
    save_png(img, tmp_path / "x.png")
    assert np.array_equal(np.array(Image.open(tmp_path / "x.png")), img)
