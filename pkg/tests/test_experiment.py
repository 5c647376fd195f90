import json
import os

import pytest

from mycosim.config import small_config
from mycosim.experiment import RunManifest, StageError, run_experiment


def small(tmp_path, name, **kw):
    cfg = small_config(str(tmp_path / name), env={})
    cfg.steps = kw.pop("steps", 1000)
    for k, v in kw.items():
        setattr(cfg, k, v)
    return cfg


def test_small_run_writes_complete_manifest(tmp_path):
    cfg = small(tmp_path, "a")
    m = run_experiment(cfg)
    assert m.status == "complete" and m.failed_stage is None
    root = cfg.output_dir
    listed = {a["path"] for a in m.artifacts}
    on_disk = {os.path.relpath(os.path.join(d, f), root).replace(os.sep, "/")
               for d, _, fs in os.walk(root) for f in fs} - {"manifest.json"}
    assert listed == on_disk
    assert RunManifest.read(os.path.join(root, "manifest.json")).verify(root) == []
    for name in ("01", "10", "11"):
        lines = open(os.path.join(root, f"scenario_{name}", "traces.csv")).read().splitlines()
        assert len(lines) == 1 + cfg.steps // cfg.cadence
    for f in ("gates/census.csv", "gates/events.csv", "gates/summary.txt", "analysis/isi_histogram.csv"):
        assert f in listed


def test_scenario_order_does_not_change_bytes(tmp_path):
    a = run_experiment(small(tmp_path, "a", frames=False)).checksums()
    cfg = small(tmp_path, "b", frames=False)
    cfg.scenarios = list(reversed(cfg.scenarios))
    b = run_experiment(cfg).checksums()
    for key in a:
        if key.startswith("scenario_"):
            assert a[key] == b[key], key


def test_manifest_detects_tampering(tmp_path):
    cfg = small(tmp_path, "a", steps=200, frames=False)
    m = run_experiment(cfg)
    with open(os.path.join(cfg.output_dir, "scenario_01", "activity.csv"), "a") as fh:
        fh.write("x\n")
    os.remove(os.path.join(cfg.output_dir, "grid.pgm"))
    problems = m.verify(cfg.output_dir)
    assert "checksum mismatch scenario_01/activity.csv" in problems and "missing grid.pgm" in problems


def test_failure_marks_manifest_incomplete(tmp_path):
    cfg = small(tmp_path, "a", steps=200, frames=False)
    cfg.layout = str(tmp_path / "missing_layout.txt")
    with pytest.raises(StageError) as info:
        run_experiment(cfg)
    assert info.value.stage == "electrodes"
    doc = json.load(open(os.path.join(cfg.output_dir, "manifest.json")))
    assert doc["status"] == "incomplete" and doc["failed_stage"] == "electrodes"
    assert any(a["path"] == "grid.mycogrid" for a in doc["artifacts"])
