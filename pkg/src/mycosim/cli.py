"""Command line entry point: ``mycosim <subcommand> ...``.

Exit codes: 0 success, 2 invalid configuration or arguments, 3 the
integration diverged, 4 input/output or file-format failure.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

from . import __version__, data
from .config import OUTPUT_ENV, STANDARD_SCENARIOS, small_config, validate_config
from .electrodes import StimulusScenario, place_electrodes, read_layout, read_scenarios, read_traces_csv, write_traces_csv
from .engine import FhnParams, save_checkpoint
from .errors import ConfigError, IntegrationDiverged, MycoError
from .gates import INPUTS, gate_census
from .ingest import ThresholdRule, ingest, load_image, read_grid, write_grid, write_pgm
from .metrics import FrameWriter, render_coverage, save_png
from .spikes import (count_in_windows, detect_spikes, inter_spike_intervals, isi_histogram,
                     load_logger_csv, parse_windows, write_spikes_csv)

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED, EXIT_IO = 0, 2, 3, 4
log = logging.getLogger("mycosim")


def _out_dir(args_out, default):
    return args_out or os.environ.get(OUTPUT_ENV) or default


def _grid_from(args):
    if args.grid:
        return read_grid(args.grid)
    path = data.path(data.NETWORK_IMAGE) if args.image in (None, "bundled") else args.image
    grid, _ = ingest(load_image(path), rows=args.rows, cols=args.cols)
    return grid


# -- subcommands --------------------------------------------------------------------

def cmd_ingest(args):
    rule = ThresholdRule(args.r_min, args.g_min, args.b_max)
    path = data.path(data.NETWORK_IMAGE) if args.image == "bundled" else args.image
    grid, counts = ingest(load_image(path), rule, args.dilate, args.rows, args.cols, args.transpose)
    write_grid(grid, args.out)
    if args.pgm:
        write_pgm(grid.mask, args.pgm)
    for stage, n in counts.items():
        print(f"{stage}: {n}")
    print(f"wrote {args.out} ({grid.rows}x{grid.cols}, {grid.n_conductive} conductive)")


def cmd_simulate(args):
    from .experiment import simulate_scenario
    grid = _grid_from(args)
    layout = data.path(data.ELECTRODE_LAYOUT) if args.layout == "bundled" else args.layout
    electrodes = place_electrodes(read_layout(layout), grid, args.radius)
    if args.scenarios:
        scenarios = read_scenarios(args.scenarios)
    elif args.stimulate:
        scenarios = [StimulusScenario("+".join(args.stimulate), tuple(args.stimulate), args.amplitude)]
    else:
        scenarios = list(STANDARD_SCENARIOS)
    try:
        params = FhnParams(c2=args.c2, dt=args.dt)
    except ValueError as exc:
        raise ConfigError(str(exc).split("; ")) from None
    out = _out_dir(args.out, "mycosim-sim")
    for sc in scenarios:
        sdir = os.path.join(out, f"scenario_{sc.name}")
        os.makedirs(sdir, exist_ok=True)
        frames = FrameWriter(os.path.join(sdir, "frames"), every=args.frames_every) if args.frames_every else None
        res = simulate_scenario(grid, electrodes, sc, params, args.steps, args.cadence, args.workers,
                                extra_observers=[frames] if frames else ())
        write_traces_csv(res.traces, os.path.join(sdir, "traces.csv"))
        res.activity.write_csv(os.path.join(sdir, "activity.csv"))
        res.coverage.write_csv(os.path.join(sdir, "coverage.csv"))
        save_png(render_coverage(res.coverage), os.path.join(sdir, "coverage.png"))
        save_checkpoint(res.final_state, os.path.join(sdir, "final_state.mycostate"))
        print(f"scenario {sc.name}: {res.perturbed} nodes stimulated, {args.steps} steps -> {sdir}")


def _is_traces_csv(path):
    with open(path, encoding="utf-8") as fh:
        return fh.readline().split(",")[0].strip() == "iteration"


def _trains_from_file(path, prominence, band=None, baseline=None):
    """Spike trains from a simulated traces CSV or a logger export."""
    if _is_traces_csv(path):
        iterations, traces = read_traces_csv(path)
        return [detect_spikes(v, prominence, times=iterations, source=k, prominence_band=band,
                              baseline_window=baseline) for k, v in traces.items()]
    return [detect_spikes(ch.values, prominence, times=ch.times, source=ch.label, prominence_band=band,
                          baseline_window=baseline) for ch in load_logger_csv(path)]


def cmd_analyze(args):
    band = (args.band_low, args.band_high) if args.band_low is not None or args.band_high is not None else None
    trains = _trains_from_file(args.input, args.prominence, band, args.baseline)
    out = _out_dir(args.out, "mycosim-analysis")
    os.makedirs(out, exist_ok=True)
    for t in trains:
        safe = t.source.replace(" ", "_").replace("/", "_")
        write_spikes_csv(t, os.path.join(out, f"spikes_{safe}.csv"))
        print(f"{t.source}: {len(t)} spikes")
    if args.windows:
        windows = parse_windows(args.windows)
        report = None
        for t in trains:
            report = count_in_windows(t, windows, report)
        report.write_csv(os.path.join(out, "window_counts.csv"))
        for channel, counts in report.rows.items():
            print(f"{channel}: " + ", ".join(f"{l}={c}" for l, c in zip(report.labels, counts)))
    # 60 s bins for logger exports, 1000 iterations for simulated traces
    width = args.bin_width or (1000.0 if _is_traces_csv(args.input) else 60.0)
    durations = {t.source: inter_spike_intervals(t) for t in trains}
    isi_histogram(durations, width).write_csv(os.path.join(out, "isi_histogram.csv"))


def cmd_gates(args):
    if args.run_dir:
        paths = {n: os.path.join(args.run_dir, f"scenario_{n}", "traces.csv") for n in INPUTS}
    else:
        paths = {"01": args.run01, "10": args.run10, "11": args.run11}
        if not all(paths.values()):
            raise ConfigError("give --run-dir or all of --run01, --run10, --run11")
    per_input = {}
    for name, path in paths.items():
        if not os.path.exists(path):
            raise FileNotFoundError(f"missing {path}")
        per_input[name] = {t.source: t for t in _trains_from_file(path, args.prominence)}
    columns = [set(d) for d in per_input.values()]
    if any(c != columns[0] for c in columns):
        raise ConfigError("the three trace files must share the same electrode columns")
    ids = columns[0]
    census = gate_census({e: {n: per_input[n][e] for n in INPUTS} for e in ids}, args.window, args.gap)
    out = _out_dir(args.out, os.path.join(args.run_dir, "gates") if args.run_dir else "mycosim-gates")
    os.makedirs(out, exist_ok=True)
    census.write_events_csv(os.path.join(out, "events.csv"))
    census.write_census_csv(os.path.join(out, "census.csv"))
    with open(os.path.join(out, "summary.txt"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(census.summary() + "\n")
    print(census.summary())


def cmd_run(args):
    from .experiment import run_experiment
    if args.small:
        cfg = small_config(_out_dir(args.out, "mycosim-small"), args.workers or 1, env={})
    else:
        cfg = validate_config(args.config)
        if args.out:
            cfg.output_dir = args.out
        if args.workers:
            cfg.workers = args.workers
    manifest = run_experiment(cfg)
    print(f"{manifest.status}: {len(manifest.artifacts)} artifacts in {cfg.output_dir}")
    gates = os.path.join(cfg.output_dir, "gates", "summary.txt")
    if os.path.exists(gates):
        with open(gates, encoding="utf-8") as fh:
            print(fh.read().rstrip())


def cmd_sweep(args):
    from .calibration import excitability_sweep
    report = excitability_sweep(args.c2, size=args.size, stim_nodes=args.nodes, check_step=args.check,
                                horizon=args.horizon, workers=args.workers)
    print(report.text())
    if args.out:
        report.write_csv(args.out)


def cmd_version(args):
    print(f"mycosim {__version__}")


# -- parser -------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="mycosim", description="Excitable-medium simulator for mycelium networks.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("ingest", help="image -> conductive grid")
    s.add_argument("--image", default="bundled", help="PNG/PPM path or 'bundled' (default)")
    s.add_argument("--out", required=True, help="output .mycogrid file")
    s.add_argument("--pgm", help="also write a PGM preview")
    s.add_argument("--rows", type=int, default=364)
    s.add_argument("--cols", type=int, default=985)
    s.add_argument("--dilate", type=int, default=1)
    s.add_argument("--transpose", choices=("auto", "on", "off"), default="auto")
    s.add_argument("--r-min", type=int, default=170)
    s.add_argument("--g-min", type=int, default=170)
    s.add_argument("--b-max", type=int, default=200)
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("simulate", help="run stimulation scenarios on a grid")
    src = s.add_mutually_exclusive_group()
    src.add_argument("--grid", help=".mycogrid file")
    src.add_argument("--image", help="image path or 'bundled' (default)")
    s.add_argument("--rows", type=int, default=364)
    s.add_argument("--cols", type=int, default=985)
    s.add_argument("--layout", default="bundled")
    s.add_argument("--radius", type=float, default=2.0)
    s.add_argument("--scenarios", help="scenario file; default: 01, 10, 11")
    s.add_argument("--stimulate", nargs="+", metavar="ID", help="single scenario stimulating these electrodes")
    s.add_argument("--amplitude", type=float, default=1.0)
    s.add_argument("--steps", type=int, default=60000)
    s.add_argument("--cadence", type=int, default=100)
    s.add_argument("--c2", type=float, default=0.05)
    s.add_argument("--dt", type=float, default=0.015)
    s.add_argument("--frames-every", type=int, default=0, help="write PNG frames at this cadence (0: none)")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("analyze", help="detect spikes in a traces CSV or logger export")
    s.add_argument("--input", required=True, help="traces CSV (simulated) or logger export")
    s.add_argument("--out")
    s.add_argument("--prominence", type=float, default=0.03)
    s.add_argument("--band-low", type=float)
    s.add_argument("--band-high", type=float)
    s.add_argument("--baseline", type=int, help="moving-median window in samples")
    s.add_argument("--windows", help="label=start:end,... counting windows")
    s.add_argument("--bin-width", type=float, help="ISI bin width (default 60 s for logs, 1000 iterations for traces)")
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("gates", help="gate census from the traces of scenarios 01, 10, 11")
    s.add_argument("--run01")
    s.add_argument("--run10")
    s.add_argument("--run11")
    s.add_argument("--run-dir", help="experiment output directory instead of the three files")
    s.add_argument("--out")
    s.add_argument("--prominence", type=float, default=0.03)
    s.add_argument("--window", type=float, default=200)
    s.add_argument("--gap", type=float, default=1000)
    s.set_defaults(func=cmd_gates)

    s = sub.add_parser("run", help="full experiment from a config file")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--config")
    g.add_argument("--small", action="store_true", help="100x100 synthetic grid, 5000 steps")
    s.add_argument("--out")
    s.add_argument("--workers", type=int)
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="c2 excitability sweep on an open square")
    s.add_argument("--c2", type=float, nargs="+", default=[0.015, 0.02, 0.03, 0.04, 0.05])
    s.add_argument("--size", type=int, default=100)
    s.add_argument("--nodes", type=int, default=10)
    s.add_argument("--check", type=int, default=20000)
    s.add_argument("--horizon", type=int, default=60000)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("version")
    s.set_defaults(func=cmd_version)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except Exception as exc:
        cause = getattr(exc, "cause", exc)  # stage failures wrap the original error
        if isinstance(cause, ConfigError):
            print(f"configuration error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        if isinstance(cause, IntegrationDiverged):
            print(f"diverged: {exc}", file=sys.stderr)
            return EXIT_DIVERGED
        if isinstance(cause, (MycoError, OSError)):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_IO
        if isinstance(cause, ValueError):
            print(f"invalid argument: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        raise
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
