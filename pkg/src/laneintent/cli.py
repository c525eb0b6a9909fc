"""Command-line harness: experiment matrix, single runs, replay, traces.

Subcommands:

* ``matrix``    run every (threshold, mode) combination of the experiment
                matrix (12 runs by default) into per-run directories plus a
                combined summary;
* ``run``       run a single scenario;
* ``gen-trace`` emit the synthetic curved two-lane benchmark trace;
* ``replay``    feed a trace through recognition on a fixed intent schedule.

All parameters default to the reference setup; a config file (INI sections
``[sim]``, ``[track]``, ``[dms]``, ``[matrix]``) overrides them.  Exit
codes: 0 success, 2 config error, 3 runtime fault.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import os
import sys
from dataclasses import dataclass, replace
from multiprocessing import get_context
from pathlib import Path

from .geometry import TrackSpec, build_octagon_track
from .messaging import SIGNAL_CODES
from .metrics import ExperimentResult
from .replay import (ReplayScenario, generate_benchmark_trace,
                     read_lane_annotations, run_replay)
from .runner import RunArtifacts, run_scenario
from .sim import MODES, SimConfig, SimulationIntegrityError
from .traces import TraceFormatError

OUT_DIR_ENV = "LANEINTENT_OUT_DIR"

DEFAULT_THRESHOLDS = (50.0, 75.0, 100.0, 150.0)
DEFAULT_MODES = MODES
DEFAULT_SEED = 20260808


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


@dataclass(frozen=True)
class TrackParams:
    straight_len: float = 80.0
    arc_radius: float = 40.0
    lane_count: int = 3
    lane_width: float = 3.5

    def build(self) -> TrackSpec:
        return build_octagon_track(self.straight_len, self.arc_radius,
                                   self.lane_count, self.lane_width)


@dataclass(frozen=True)
class MatrixParams:
    thresholds: tuple[float, ...] = DEFAULT_THRESHOLDS
    modes: tuple[str, ...] = DEFAULT_MODES
    base_seed: int = DEFAULT_SEED


_SIM_FIELDS = {
    "n_vehicles": int, "duration": float, "dt": float, "intent_period": float,
    "tv_dist_thresh": float, "mode": str, "brake_delta": float,
    "brake_hold": float, "headway_window": float, "rng_seed": int,
    "bsm_rate": float, "channel_loss_prob": float, "reaction_time": float,
    "decel_cap": float, "min_gap": float, "lane_change_duration": float,
    "vehicle_length": float,
}
_DMS_FIELDS = {
    "staleness_timeout": float, "max_path_length": float,
    "min_sample_spacing": float,
}
_TRACK_FIELDS = {
    "straight_len": float, "arc_radius": float, "lane_count": int,
    "lane_width": float,
}


def _parse_speed_classes(text: str) -> tuple[tuple[float, float], ...]:
    classes = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            v_max, accel = part.split(":")
            classes.append((float(v_max), float(accel)))
        except ValueError:
            raise ConfigError(
                f"[sim] speed_classes: bad entry {part!r}, want vmax:accel") from None
    if not classes:
        raise ConfigError("[sim] speed_classes: no classes given")
    return tuple(classes)


def load_config(path: str | Path | None) -> tuple[SimConfig, TrackParams, MatrixParams]:
    """Defaults overridden by an INI file when one is given."""
    sim_kwargs: dict = {}
    track_kwargs: dict = {}
    matrix_kwargs: dict = {}
    if path is not None:
        parser = configparser.ConfigParser()
        read = parser.read(path)
        if not read:
            raise ConfigError(f"cannot read config file {path}")
        for section in parser.sections():
            if section not in ("sim", "track", "dms", "matrix"):
                raise ConfigError(f"unknown config section [{section}]")
        for key, raw in parser.items("sim") if parser.has_section("sim") else []:
            if key == "speed_classes":
                sim_kwargs["speed_classes"] = _parse_speed_classes(raw)
            elif key in _SIM_FIELDS:
                sim_kwargs[key] = _convert("sim", key, raw, _SIM_FIELDS[key])
            else:
                raise ConfigError(f"unknown key [sim] {key}")
        for key, raw in parser.items("dms") if parser.has_section("dms") else []:
            if key not in _DMS_FIELDS:
                raise ConfigError(f"unknown key [dms] {key}")
            sim_kwargs[key] = _convert("dms", key, raw, _DMS_FIELDS[key])
        for key, raw in parser.items("track") if parser.has_section("track") else []:
            if key not in _TRACK_FIELDS:
                raise ConfigError(f"unknown key [track] {key}")
            track_kwargs[key] = _convert("track", key, raw, _TRACK_FIELDS[key])
        if parser.has_section("matrix"):
            for key, raw in parser.items("matrix"):
                if key == "thresholds":
                    matrix_kwargs["thresholds"] = tuple(
                        _convert("matrix", key, v.strip(), float)
                        for v in raw.split(",") if v.strip())
                elif key == "modes":
                    modes = tuple(v.strip() for v in raw.split(",") if v.strip())
                    for m in modes:
                        if m not in MODES:
                            raise ConfigError(f"[matrix] modes: unknown mode {m!r}")
                    matrix_kwargs["modes"] = modes
                elif key == "base_seed":
                    matrix_kwargs["base_seed"] = _convert("matrix", key, raw, int)
                else:
                    raise ConfigError(f"unknown key [matrix] {key}")
    try:
        sim = SimConfig(**sim_kwargs)
    except ValueError as exc:
        raise ConfigError(f"[sim] {exc}") from exc
    try:
        track = TrackParams(**track_kwargs)
        track.build()
    except ValueError as exc:
        raise ConfigError(f"[track] {exc}") from exc
    return sim, track, MatrixParams(**matrix_kwargs)


def _convert(section: str, key: str, raw: str, typ):
    try:
        return typ(raw)
    except ValueError:
        raise ConfigError(
            f"[{section}] {key}: cannot parse {raw!r} as {typ.__name__}") from None


# ----------------------------------------------------------------------
# result emission

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_events_csv(path: Path, events) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("t", "method", "thresh", "outcome", "predicted", "truth"))
        for ev in events:
            writer.writerow((_fmt(ev.t), ev.method, _fmt(ev.thresh),
                             "" if ev.outcome is None else ev.outcome.value,
                             _fmt(ev.predicted), _fmt(ev.truth)))


def write_headways_csv(path: Path, records) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("t", "time_headway_s", "space_headway_m", "window_id",
                         "initial_gap_m"))
        for rec in records:
            writer.writerow((_fmt(rec.t), _fmt(rec.time_headway),
                             _fmt(rec.space_headway), rec.window_id,
                             _fmt(rec.initial_gap)))


def write_diagnostics_csv(path: Path, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("t", "method", "thresh", "n_candidates", "chosen",
                         "offsets"))
        for row in rows:
            writer.writerow((_fmt(row.t), row.method, _fmt(row.thresh),
                             row.n_candidates, _fmt(row.chosen), row.offsets))


def result_to_dict(result: ExperimentResult) -> dict:
    return {
        "mode": result.mode,
        "threshold_m": result.thresh,
        "seed": result.seed,
        "n_events": result.n_events,
        "counts": result.counts,
        "percent": result.percent,
        "n_lane_changes": result.n_lane_changes,
        "n_blocked_changes": result.n_blocked_changes,
        "headway": {
            "n_samples": result.n_headway_samples,
            "mean_space_headway_m": result.mean_space_headway,
            "mean_time_headway_s": result.mean_time_headway,
            "bins": result.headway_bins,
        },
    }


def write_summary_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def emit_run(out_dir: Path, artifacts: RunArtifacts) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    write_events_csv(out_dir / "events.csv", artifacts.events)
    write_headways_csv(out_dir / "headways.csv", artifacts.headways)
    write_diagnostics_csv(out_dir / "diagnostics.csv", artifacts.diagnostics)
    write_summary_json(out_dir / "summary.json",
                       result_to_dict(artifacts.result))


def run_dir_name(thresh: float, mode: str) -> str:
    return f"thr{int(round(thresh)):03d}_{mode}"


# ----------------------------------------------------------------------
# matrix execution

def _run_cell(args: tuple) -> ExperimentResult:
    sim, track_params, out_dir, truth_trace = args
    track = track_params.build()
    truth_sink = None
    fh = None
    if truth_trace:
        fh = open(Path(out_dir) / "truth_trace.csv", "w", newline="")
        writer = csv.writer(fh)
        writer.writerow(("t", "id", "s", "lane", "lateral_offset", "speed",
                         "yaw_rate", "turn_signal"))
        truth_sink = lambda row: writer.writerow(
            tuple(_fmt(v) if isinstance(v, float) else v for v in row))
    try:
        artifacts = run_scenario(track, sim, truth_sink=truth_sink)
    finally:
        if fh is not None:
            fh.close()
    emit_run(Path(out_dir), artifacts)
    return artifacts.result


def run_matrix(sim: SimConfig, track_params: TrackParams, matrix: MatrixParams,
               out_dir: Path, jobs: int = 1, truth_trace: bool = False) -> dict:
    out_dir.mkdir(parents=True, exist_ok=True)
    cells = []
    index = 0
    for thresh in matrix.thresholds:
        for mode in matrix.modes:
            cell_cfg = replace(sim, tv_dist_thresh=thresh, mode=mode,
                               rng_seed=matrix.base_seed + index,
                               placement_seed=matrix.base_seed)
            cell_dir = out_dir / run_dir_name(thresh, mode)
            cell_dir.mkdir(parents=True, exist_ok=True)
            cells.append((cell_cfg, track_params, str(cell_dir), truth_trace))
            index += 1
    if jobs > 1 and len(cells) > 1:
        try:
            ctx = get_context("fork")
        except ValueError:
            ctx = get_context("spawn")
        with ctx.Pool(min(jobs, len(cells))) as pool:
            results = pool.map(_run_cell, cells)
    else:
        results = [_run_cell(cell) for cell in cells]
    payload = {
        "base_seed": matrix.base_seed,
        "n_runs": len(results),
        "runs": [result_to_dict(r) for r in results],
    }
    write_summary_json(out_dir / "summary.json", payload)
    return payload


# ----------------------------------------------------------------------
# argument parsing and dispatch

def _resolve_out_dir(value: str | None, default: str) -> Path:
    if value:
        return Path(value)
    return Path(os.environ.get(OUT_DIR_ENV, default))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="laneintent",
        description="Lane-change intent messaging simulator and replay harness")
    sub = parser.add_subparsers(dest="command", required=True)

    p_matrix = sub.add_parser("matrix", help="run the full experiment matrix")
    p_matrix.add_argument("--config", help="INI config file")
    p_matrix.add_argument("--seed", type=int, help="override the base seed")
    p_matrix.add_argument("--out-dir", help=f"output directory (or ${OUT_DIR_ENV})")
    p_matrix.add_argument("--jobs", type=int, default=1,
                          help="parallel scenario runs (default 1)")
    p_matrix.add_argument("--truth-trace", action="store_true",
                          help="emit per-tick ground-truth CSVs")

    p_run = sub.add_parser("run", help="run a single scenario")
    p_run.add_argument("--config", help="INI config file")
    p_run.add_argument("--seed", type=int, help="override the seed")
    p_run.add_argument("--out-dir", help=f"output directory (or ${OUT_DIR_ENV})")
    p_run.add_argument("--threshold", type=float, help="TV distance threshold, m")
    p_run.add_argument("--mode", choices=MODES, help="scenario mode")
    p_run.add_argument("--truth-trace", action="store_true")

    p_gen = sub.add_parser("gen-trace", help="emit the benchmark trace")
    p_gen.add_argument("--out-dir", help=f"output directory (or ${OUT_DIR_ENV})")
    p_gen.add_argument("--duration", type=float, default=240.0)
    p_gen.add_argument("--trailing-gap", type=float, default=250.0)
    p_gen.add_argument("--speed", type=float, default=30.0)
    p_gen.add_argument("--arc-radius", type=float, default=40.0)

    p_replay = sub.add_parser("replay", help="replay a trace through recognition")
    p_replay.add_argument("--trace", required=True)
    p_replay.add_argument("--annotations", help="static lane annotations CSV")
    p_replay.add_argument("--out-dir", help=f"output directory (or ${OUT_DIR_ENV})")
    p_replay.add_argument("--method", default="path_history",
                          choices=("path_history", "lateral_only"))
    p_replay.add_argument("--threshold", type=float, default=300.0)
    p_replay.add_argument("--intent-period", type=float, default=10.0)
    p_replay.add_argument("--direction", default="left", choices=("left", "right"))
    p_replay.add_argument("--hv-id", type=int, default=0)
    p_replay.add_argument("--max-path-length", type=float, default=400.0)
    return parser


def _cmd_matrix(args) -> int:
    sim, track_params, matrix = load_config(args.config)
    if args.seed is not None:
        matrix = MatrixParams(matrix.thresholds, matrix.modes, args.seed)
    out_dir = _resolve_out_dir(args.out_dir, "results")
    payload = run_matrix(sim, track_params, matrix, out_dir,
                         jobs=max(1, args.jobs), truth_trace=args.truth_trace)
    for run in payload["runs"]:
        pct = run["percent"]
        print(f"{run_dir_name(run['threshold_m'], run['mode'])}: "
              f"events={run['n_events']} TP%={pct['TP']:.1f} TN%={pct['TN']:.1f} "
              f"FP%={pct['FP']:.1f} FN%={pct['FN']:.1f}")
    print(f"wrote {payload['n_runs']} runs to {out_dir}")
    return 0


def _cmd_run(args) -> int:
    sim, track_params, matrix = load_config(args.config)
    if args.threshold is not None:
        sim = replace(sim, tv_dist_thresh=args.threshold)
    if args.mode is not None:
        sim = replace(sim, mode=args.mode)
    if args.seed is not None:
        sim = replace(sim, rng_seed=args.seed, placement_seed=args.seed)
    out_dir = _resolve_out_dir(args.out_dir, "results")
    cell_dir = out_dir / run_dir_name(sim.tv_dist_thresh, sim.mode)
    cell_dir.mkdir(parents=True, exist_ok=True)
    result = _run_cell((sim, track_params, str(cell_dir), args.truth_trace))
    pct = result.percent
    print(f"{cell_dir}: events={result.n_events} TP%={pct['TP']:.1f} "
          f"TN%={pct['TN']:.1f} FP%={pct['FP']:.1f} FN%={pct['FN']:.1f}")
    return 0


def _cmd_gen_trace(args) -> int:
    out_dir = _resolve_out_dir(args.out_dir, "trace_out")
    paths = generate_benchmark_trace(out_dir, duration=args.duration,
                                     trailing_gap=args.trailing_gap,
                                     speed=args.speed,
                                     arc_radius=args.arc_radius)
    for name, path in paths.items():
        print(f"{name}: {path}")
    return 0


def _cmd_replay(args) -> int:
    lanes = read_lane_annotations(args.annotations) if args.annotations else None
    scenario = ReplayScenario(
        trace_path=args.trace, hv_id=args.hv_id,
        intent_period=args.intent_period,
        direction=SIGNAL_CODES[args.direction], method=args.method,
        tv_dist_thresh=args.threshold, max_path_length=args.max_path_length,
        lanes=lanes)
    report = run_replay(scenario)
    out_dir = _resolve_out_dir(args.out_dir, "replay_out")
    out_dir.mkdir(parents=True, exist_ok=True)
    write_events_csv(out_dir / "replay_events.csv", report.events)
    write_diagnostics_csv(out_dir / "replay_diagnostics.csv", report.diagnostics)
    payload = {
        "method": args.method,
        "threshold_m": args.threshold,
        "n_intents": len(report.events),
        "scored": report.scored,
        "counts": report.counts() if report.scored else None,
    }
    write_summary_json(out_dir / "replay_summary.json", payload)
    if report.scored:
        counts = report.counts()
        n = max(1, len(report.events))
        print(f"intents={len(report.events)} TP={counts['TP']} FP={counts['FP']} "
              f"TN={counts['TN']} FN={counts['FN']} "
              f"(TP%={100.0 * counts['TP'] / n:.1f})")
    else:
        print(f"intents={len(report.events)} (unscored; no annotations)")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "matrix": _cmd_matrix,
        "run": _cmd_run,
        "gen-trace": _cmd_gen_trace,
        "replay": _cmd_replay,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (SimulationIntegrityError, TraceFormatError) as exc:
        print(f"runtime fault: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
