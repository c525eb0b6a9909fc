#!/usr/bin/env python3
"""Run the full 12-scenario experiment matrix and print a trend summary.

Equivalent to ``laneintent matrix`` with the reference defaults; jobs
default to the machine's core count (capped at 4).
"""

import argparse
import os
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from laneintent.cli import MatrixParams, TrackParams, load_config, run_matrix  # noqa: E402


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", help="INI config file (defaults otherwise)")
    parser.add_argument("--out-dir", default="results")
    parser.add_argument("--seed", type=int, help="override the base seed")
    parser.add_argument("--jobs", type=int,
                        default=min(4, os.cpu_count() or 1))
    args = parser.parse_args()

    sim, track_params, matrix = load_config(args.config)
    if args.seed is not None:
        matrix = MatrixParams(matrix.thresholds, matrix.modes, args.seed)

    t0 = time.perf_counter()
    payload = run_matrix(sim, track_params, matrix, Path(args.out_dir),
                         jobs=args.jobs)
    wall = time.perf_counter() - t0

    runs = {(r["threshold_m"], r["mode"]): r for r in payload["runs"]}
    print(f"\n{'thr':>5} {'ph TP+TN%':>10} {'lat TP+TN%':>11} "
          f"{'ph space':>9} {'no_dms space':>13}")
    for thr in matrix.thresholds:
        ph = runs.get((thr, "dms_ph"))
        lat = runs.get((thr, "dms_lateral"))
        nd = runs.get((thr, "no_dms"))
        cols = [f"{thr:5.0f}"]
        cols.append(f"{ph['percent']['TP'] + ph['percent']['TN']:10.1f}"
                    if ph else " " * 10)
        cols.append(f"{lat['percent']['TP'] + lat['percent']['TN']:11.1f}"
                    if lat else " " * 11)
        cols.append(f"{ph['headway']['mean_space_headway_m']:9.2f}"
                    if ph and ph['headway']['mean_space_headway_m'] else " " * 9)
        cols.append(f"{nd['headway']['mean_space_headway_m']:13.2f}"
                    if nd and nd['headway']['mean_space_headway_m'] else " " * 13)
        print(" ".join(cols))
    print(f"\n{payload['n_runs']} runs in {wall:.0f}s -> {args.out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
