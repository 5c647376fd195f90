"""
Experiment configuration files.

UTF-8 INI-style text (read with :mod:`configparser`); every key is optional
except a grid source and ``run.steps``. Relative input paths resolve against
the config file's directory, a relative output directory against the working
directory; ``MYCOSIM_OUTPUT_DIR`` overrides the output directory. The value
``bundled`` selects the packaged network image or electrode layout. Example::

    [grid]
    image = bundled          # or: grid_file = my.mycogrid
    r_min = 170
    g_min = 170
    b_max = 200
    dilate = 1
    rows = 364
    cols = 985
    transpose = auto

    [fhn]
    c2 = 0.05                # also D_u, a, b, c1, I, dt, dx

    [electrodes]
    layout = bundled         # omitted: bundled layout for the bundled image,
                             # an automatic arc otherwise
    radius = 2

    [scenario 01]            # one section per scenario; when none are given
    targets = E2             # the three input pairs 01, 10, 11 are used
    amplitude = 1.0
    radius = auto
    at_iteration = 0

    [run]
    steps = 60000
    cadence = 100
    output_dir = out
    workers = 1
    frames = yes
    seed = 0

    [analysis]
    prominence = 0.03
    window = 200
    gap = 1000
    bin_width = 1000
"""
from __future__ import annotations

import configparser
import hashlib
import json
import os
from dataclasses import asdict, dataclass, field

from .electrodes import StimulusScenario
from .engine import FhnParams
from .errors import ConfigError
from .ingest import ThresholdRule

OUTPUT_ENV = "MYCOSIM_OUTPUT_DIR"
BUNDLED = "bundled"

STANDARD_SCENARIOS = (
    StimulusScenario("01", ("E2",)),
    StimulusScenario("10", ("E1",)),
    StimulusScenario("11", ("E1", "E2")),
)

_SCHEMA = {
    "grid": {"image": str, "grid_file": str, "r_min": int, "g_min": int, "b_max": int,
             "dilate": int, "rows": int, "cols": int, "transpose": str},
    "fhn": {"D_u": float, "a": float, "b": float, "c1": float, "c2": float, "I": float,
            "dt": float, "dx": float},
    "electrodes": {"layout": str, "radius": float},
    "run": {"steps": int, "cadence": int, "output_dir": str, "workers": int, "frames": bool,
            "seed": int, "activity_threshold": float, "coverage_threshold": float,
            "display_threshold": float},
    "analysis": {"prominence": float, "window": float, "gap": float, "bin_width": float},
}
_SCENARIO_KEYS = {"targets": str, "amplitude": float, "radius": str, "at_iteration": int}


@dataclass
class ExperimentConfig:
    grid_source: str = BUNDLED  # "bundled", "image", "grid_file" or "small"
    grid_path: str | None = None
    rule: ThresholdRule = field(default_factory=ThresholdRule)
    dilate: int = 1
    rows: int = 364
    cols: int = 985
    transpose: str = "auto"
    params: FhnParams = field(default_factory=FhnParams)
    layout: str | None = None  # path, "bundled", or None for automatic
    electrode_radius: float = 2.0
    scenarios: list = field(default_factory=lambda: list(STANDARD_SCENARIOS))
    steps: int = 60000
    cadence: int = 100
    output_dir: str = "mycosim-out"
    workers: int = 1
    frames: bool = True
    seed: int = 0
    activity_threshold: float = 0.1
    coverage_threshold: float = 0.1
    display_threshold: float = 0.04
    prominence: float = 0.03
    window: float = 200
    gap: float = 1000
    bin_width: float = 1000

    def canonical(self):
        """JSON-ready description of everything that shapes the artifacts.

        Input files enter by content hash, so moving them does not matter;
        output directory and worker count are left out.
        """
        d = asdict(self)
        d.pop("output_dir")
        d.pop("workers")
        for key in ("grid_path", "layout"):
            path = d[key]
            if path and path != BUNDLED and os.path.exists(path):
                d[key] = "sha256:" + file_sha256(path)
        d["scenarios"] = [asdict(s) for s in self.scenarios]
        return d

    def hash(self):
        blob = json.dumps(self.canonical(), sort_keys=True, default=list).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()


def file_sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _convert(raw, kind, where, problems):
    try:
        if kind is bool:
            low = raw.strip().lower()
            if low in ("1", "yes", "true", "on"):
                return True
            if low in ("0", "no", "false", "off"):
                return False
            raise ValueError
        return kind(raw.strip())
    except ValueError:
        problems.append(f"{where}: expected {kind.__name__}, got {raw!r}")
        return None


def validate_config(source, base_dir=None, env=None) -> ExperimentConfig:
    """Parse and validate a config file (path) or config text.

    All problems are collected and raised together as one :class:`ConfigError`.
    """
    env = os.environ if env is None else env
    parser = configparser.ConfigParser(interpolation=None, default_section="__none__",
                                       inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    problems = []
    try:
        if os.path.exists(str(source)) and "\n" not in str(source):
            with open(source, encoding="utf-8") as fh:
                parser.read_file(fh)
            base_dir = base_dir or os.path.dirname(os.path.abspath(source))
        else:
            parser.read_string(str(source))
    except configparser.Error as exc:
        raise ConfigError(f"config does not parse: {exc}") from None
    base_dir = base_dir or os.getcwd()

    values = {}
    scenarios = []
    for section in parser.sections():
        if section.startswith("scenario "):
            name = section[len("scenario "):].strip()
            spec = {}
            for key, raw in parser.items(section):
                if key not in _SCENARIO_KEYS:
                    problems.append(f"[{section}] unknown key {key!r}")
                    continue
                spec[key] = _convert(raw, _SCENARIO_KEYS[key], f"[{section}] {key}", problems)
            scenarios.append((name, spec))
            continue
        if section not in _SCHEMA:
            problems.append(f"unknown section [{section}]")
            continue
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                problems.append(f"[{section}] unknown key {key!r}")
                continue
            values[(section, key)] = _convert(raw, _SCHEMA[section][key], f"[{section}] {key}", problems)

    def get(section, key, default):
        v = values.get((section, key))
        return default if v is None else v

    def resolve(path):
        if path == BUNDLED:
            return path
        return path if os.path.isabs(path) else os.path.normpath(os.path.join(base_dir, path))

    cfg = ExperimentConfig()
    image, grid_file = get("grid", "image", None), get("grid", "grid_file", None)
    if image and grid_file:
        problems.append("[grid] give either image or grid_file, not both")
    elif image:
        cfg.grid_source = BUNDLED if image == BUNDLED else "image"
        cfg.grid_path = resolve(image)
    elif grid_file:
        cfg.grid_source = "grid_file"
        cfg.grid_path = resolve(grid_file)
    else:
        problems.append("[grid] a grid source (image or grid_file) is required")
    if cfg.grid_path and cfg.grid_path != BUNDLED and not os.path.exists(cfg.grid_path):
        problems.append(f"[grid] file not found: {cfg.grid_path}")

    try:
        cfg.rule = ThresholdRule(get("grid", "r_min", 170), get("grid", "g_min", 170), get("grid", "b_max", 200))
    except ValueError as exc:
        problems.append(f"[grid] {exc}")
    cfg.dilate = get("grid", "dilate", 1)
    if cfg.dilate < 0:
        problems.append("[grid] dilate must be >= 0")
    cfg.rows, cfg.cols = get("grid", "rows", 364), get("grid", "cols", 985)
    if cfg.rows <= 0 or cfg.cols <= 0:
        problems.append("[grid] rows and cols must be positive")
    cfg.transpose = get("grid", "transpose", "auto")
    if cfg.transpose not in ("auto", "on", "off"):
        problems.append("[grid] transpose must be auto, on or off")

    fhn = {k: values[("fhn", k)] for k in _SCHEMA["fhn"] if values.get(("fhn", k)) is not None}
    try:
        cfg.params = FhnParams(**fhn)
    except ValueError as exc:
        problems.extend(f"[fhn] {p}" for p in str(exc).split("; "))

    layout = get("electrodes", "layout", None)
    if layout is not None:
        cfg.layout = resolve(layout)
        if cfg.layout != BUNDLED and not os.path.exists(cfg.layout):
            problems.append(f"[electrodes] layout file not found: {cfg.layout}")
    elif cfg.grid_source == BUNDLED:
        cfg.layout = BUNDLED
    cfg.electrode_radius = get("electrodes", "radius", 2.0)
    if not cfg.electrode_radius > 0:
        problems.append("[electrodes] radius must be positive")

    if scenarios:
        cfg.scenarios = []
        for name, spec in scenarios:
            targets = tuple(t.strip() for t in (spec.get("targets") or "").split(",") if t.strip())
            radius = spec.get("radius") or "auto"
            try:
                radius = None if radius == "auto" else float(radius)
                cfg.scenarios.append(StimulusScenario(
                    name, targets, spec.get("amplitude") or 1.0, radius, spec.get("at_iteration") or 0))
            except ValueError:
                problems.append(f"[scenario {name}] radius must be a number or 'auto'")
            except Exception as exc:  # ElectrodeError from the scenario invariants
                problems.append(f"[scenario {name}] {exc}")
            else:
                if cfg.scenarios[-1].amplitude <= cfg.params.a:
                    problems.append(f"[scenario {name}] amplitude must exceed a={cfg.params.a}")

    steps = values.get(("run", "steps"))
    if steps is None and ("run", "steps") not in values:
        problems.append("[run] steps is required")
    elif steps is not None and steps <= 0:
        problems.append("[run] steps must be > 0")
    cfg.steps = steps if steps is not None else cfg.steps
    cfg.cadence = get("run", "cadence", 100)
    if cfg.cadence < 1:
        problems.append("[run] cadence must be >= 1")
    cfg.workers = get("run", "workers", 1)
    if cfg.workers < 1:
        problems.append("[run] workers must be >= 1")
    cfg.frames = get("run", "frames", True)
    cfg.seed = get("run", "seed", 0)
    out = env.get(OUTPUT_ENV) or get("run", "output_dir", cfg.output_dir)
    # unlike input paths, a relative output directory is taken from the working directory
    cfg.output_dir = os.path.abspath(out)
    for key in ("activity_threshold", "coverage_threshold", "display_threshold"):
        setattr(cfg, key, get("run", key, getattr(cfg, key)))
    for key in ("prominence", "window", "gap", "bin_width"):
        setattr(cfg, key, get("analysis", key, getattr(cfg, key)))
        if not getattr(cfg, key) > 0:
            problems.append(f"[analysis] {key} must be positive")
    for s in cfg.scenarios:
        if s.at_iteration >= cfg.steps:
            problems.append(f"[scenario {s.name}] at_iteration must be below steps")

    if problems:
        raise ConfigError(problems)
    return cfg


def small_config(output_dir="mycosim-small", workers=1, env=None):
    """CI profile: 100x100 synthetic network, 5000 steps."""
    env = os.environ if env is None else env
    return ExperimentConfig(grid_source="small", grid_path=None, rows=100, cols=100, layout=None,
                            steps=5000, cadence=100, output_dir=env.get(OUTPUT_ENV) or output_dir,
                            workers=workers, frames=True)
