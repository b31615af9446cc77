"""Repeated runs across derived seeds with order-stable aggregation.

Run i of a sweep is seeded by mix_seed(master_seed, i), so the summary is a
pure function of (config, master_seed, repeats) no matter how many workers
execute it; rows are collected in run-index order, not completion order.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

from .descent import DIAGNOSTIC_FIELDS, run
from .errors import InvalidArgumentError
from .rng import _check_seed, mix_seed
from .serialize import AGGREGATE_FIELDS, aggregate_stats


@dataclass(frozen=True)
class SweepResult:
    preset_name: object
    master_seed: int
    repeats: int
    config: object
    per_seed: list
    aggregates: dict


def _final_row(run_index, seed, traj):
    row = {"run_index": run_index, "seed": seed}
    rec = traj.records[-1]
    row["t"] = int(rec[0])
    for k, name in enumerate(DIAGNOSTIC_FIELDS[1:], start=1):
        row[name] = float(rec[k])
    return row


def run_sweep(cfg, gt, repeats, master_seed, jobs=1, preset_name=None):
    """repeats independent runs of cfg over derived seeds, aggregated.

    The iteration loops release the interpreter lock, so jobs > 1 gives real
    overlap; results are identical at any worker count.
    """
    repeats = int(repeats)
    if repeats < 1:
        raise InvalidArgumentError(f"repeats must be >= 1, got {repeats}")
    jobs = int(jobs)
    if jobs < 1:
        raise InvalidArgumentError(f"jobs must be >= 1, got {jobs}")
    _check_seed(master_seed)
    seeds = [mix_seed(master_seed, i) for i in range(repeats)]

    def one(i):
        traj = run(replace(cfg, seed=seeds[i]), gt)
        return _final_row(i, seeds[i], traj)

    if jobs == 1:
        rows = [one(i) for i in range(repeats)]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(one, range(repeats)))
    aggregates = {
        name: aggregate_stats([row[name] for row in rows]) for name in AGGREGATE_FIELDS
    }
    return SweepResult(
        preset_name=preset_name,
        master_seed=int(master_seed),
        repeats=repeats,
        config=replace(cfg, seed=int(master_seed)),
        per_seed=rows,
        aggregates=aggregates,
    )


def run_preset_sweep(preset, repeats=None, master_seed=0, jobs=1):
    cfg = preset.run_config(seed=0)
    gt = preset.ground_truth()
    return run_sweep(
        cfg,
        gt,
        preset.repeats if repeats is None else repeats,
        master_seed,
        jobs=jobs,
        preset_name=preset.name,
    )
