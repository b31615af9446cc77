#!/usr/bin/env python3
"""Run the preset sweeps behind the figure-style experiments and write summaries.

Each preset gets a JSON sweep summary in the output directory plus one final
trajectory CSV for its first seed, enough to re-plot every panel.  Presets are
run at their registered repeat counts unless --repeats caps them.
"""

import argparse
import os
import sys
import time

import mfnoise as mf
from mfnoise.presets import PRESETS, get_preset

DEFAULT_PRESETS = [name for name in PRESETS if name.startswith("fig")]


def parse_args():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out-dir", default="results", help="directory for summaries")
    p.add_argument(
        "--presets",
        nargs="+",
        default=DEFAULT_PRESETS,
        help=f"preset names (default: every fig* preset)",
    )
    p.add_argument("--repeats", type=int, default=None, help="cap repeats per preset")
    p.add_argument("--master-seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=None, help="worker threads (default: MFNOISE_JOBS or 1)")
    return p.parse_args()


def main():
    args = parse_args()
    jobs = args.jobs or int(os.environ.get("MFNOISE_JOBS", "1"))
    os.makedirs(args.out_dir, exist_ok=True)
    for name in args.presets:
        preset = get_preset(name)
        repeats = preset.repeats if args.repeats is None else min(args.repeats, preset.repeats)
        t0 = time.perf_counter()
        result = mf.run_preset_sweep(preset, repeats=repeats, master_seed=args.master_seed, jobs=jobs)
        summary_path = os.path.join(args.out_dir, f"{name}_sweep.json")
        mf.serialize.write_sweep_json(result, summary_path)

        cfg = preset.run_config(seed=mf.mix_seed(args.master_seed, 0))
        traj = mf.run(cfg, preset.ground_truth())
        csv_path = os.path.join(args.out_dir, f"{name}_seed0.csv")
        mf.serialize.write_trajectory_csv(traj, csv_path)

        stats = result.aggregates["ratio_sq"]
        print(
            f"{name}: {repeats} seeds in {time.perf_counter() - t0:.1f}s, "
            f"final ratio_sq median {stats['median']:.4f} "
            f"[{stats['min']:.4f}, {stats['max']:.4f}] -> {summary_path}"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
