"""Command-line front end.

Subcommands: run, sweep, landscape, phase, verify, list-presets.
Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 verification
failure.  MFNOISE_JOBS supplies a default for --jobs.
"""

import argparse
import dataclasses
import os
import sys

from .descent import ema, run
from .errors import InvalidArgumentError, NumericalFailureError
from .landscape import (
    balancedness,
    classify_stationary,
    condition_number_formula,
    hessian_spectrum,
)
from .objective import FactorPair, GroundTruth, NoiseConfig
from .presets import PRESETS, get_preset
from .rng import _check_seed
from .serialize import (
    SCHEMA_VERSION,
    write_json,
    load_config_bundle,
    load_factor_pair,
    parse_config_data,
    write_sweep_json,
    write_trajectory_csv,
    write_trajectory_json,
)
from .sweep import run_sweep
from .verify import run_verification_suite


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_run_overrides(p):
    p.add_argument("--eta-x", type=float, default=None, dest="eta_x")
    p.add_argument("--eta-y", type=float, default=None, dest="eta_y")
    p.add_argument("--stride", type=int, default=None)


def _build_parser():
    parser = _Parser(prog="mfnoise", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="one trajectory, written as CSV or JSON")
    p_run.add_argument("--preset", default=None)
    p_run.add_argument("--config", default=None)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--out", default=None)
    p_run.add_argument("--format", choices=("csv", "json"), default="csv")
    _add_run_overrides(p_run)

    p_sweep = sub.add_parser("sweep", help="repeated runs over derived seeds, JSON summary")
    p_sweep.add_argument("--preset", default=None)
    p_sweep.add_argument("--config", default=None)
    p_sweep.add_argument("--master-seed", type=int, default=0, dest="master_seed")
    p_sweep.add_argument("--repeats", type=int, default=None)
    p_sweep.add_argument("--jobs", type=int, default=None)
    p_sweep.add_argument("--out", default=None)
    _add_run_overrides(p_sweep)

    p_land = sub.add_parser("landscape", help="closed-form landscape reports")
    p_land.add_argument("--alpha", type=float, default=None)
    p_land.add_argument("--at", default=None, help="path to a factor-pair JSON file")
    p_land.add_argument("--noise", default=None, help="sigma1,sigma2")
    p_land.add_argument("--out", default=None)

    p_phase = sub.add_parser("phase", help="phase-transition report for one seeded run")
    p_phase.add_argument("--preset", default="phase2d")
    p_phase.add_argument("--seed", type=int, default=0)
    p_phase.add_argument("--out", default=None)

    p_verify = sub.add_parser("verify", help="run the numerical verification suite")
    p_verify.add_argument("--seed", type=int, default=0)
    p_verify.add_argument("--out", default=None)

    sub.add_parser("list-presets", help="list the named presets")
    return parser


def _resolve_jobs(args_jobs):
    if args_jobs is not None:
        return args_jobs
    env = os.environ.get("MFNOISE_JOBS")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"MFNOISE_JOBS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def _cfg_overrides(args, seed_field="seed"):
    out = {
        "eta_x": args.eta_x,
        "eta_y": args.eta_y,
        "record_stride": args.stride,
    }
    if seed_field is not None:
        out["seed"] = getattr(args, seed_field)
    return out


def _resolve_run_setup(args, overrides):
    """(RunConfig, GroundTruth, preset name or None) from flags."""
    if args.preset and args.config:
        raise UsageError("choose either --preset or --config, not both")
    if args.preset:
        preset = get_preset(args.preset)
        cfg = preset.run_config(seed=0)
        replacements = {k: v for k, v in overrides.items() if v is not None}
        if replacements:
            cfg = dataclasses.replace(cfg, **replacements)
        return cfg, preset.ground_truth(), preset
    if args.config:
        cfg, gt = load_config_bundle(args.config, overrides)
        return cfg, gt, None
    cfg, gt = parse_config_data({}, overrides)
    return cfg, gt, None


def _out_or_stdout(path):
    return sys.stdout if path is None else path


def _cmd_run(args):
    cfg, gt, _preset = _resolve_run_setup(args, _cfg_overrides(args))
    traj = run(cfg, gt)
    if args.format == "csv":
        write_trajectory_csv(traj, _out_or_stdout(args.out))
    else:
        write_trajectory_json(traj, _out_or_stdout(args.out))
    return 0


def _cmd_sweep(args):
    overrides = _cfg_overrides(args, seed_field=None)
    cfg, gt, preset = _resolve_run_setup(args, overrides)
    repeats = args.repeats
    if repeats is None:
        if preset is None:
            raise UsageError("--repeats is required when sweeping a --config file")
        repeats = preset.repeats
    result = run_sweep(
        cfg,
        gt,
        repeats,
        args.master_seed,
        jobs=_resolve_jobs(args.jobs),
        preset_name=None if preset is None else preset.name,
    )
    write_sweep_json(result, _out_or_stdout(args.out))
    return 0


def _parse_noise_flag(text):
    if text is None:
        return None
    parts = text.split(",")
    if len(parts) != 2:
        raise UsageError(f"--noise wants 'sigma1,sigma2', got {text!r}")
    try:
        return NoiseConfig(float(parts[0]), float(parts[1]))
    except ValueError:
        raise UsageError(f"--noise wants two numbers, got {text!r}") from None


def _cmd_landscape(args):
    noise = _parse_noise_flag(args.noise)
    if (args.alpha is None) == (args.at is None):
        raise UsageError("landscape wants exactly one of --alpha or --at")
    if args.alpha is not None:
        formula = condition_number_formula(args.alpha)
        gt = GroundTruth.rank1(20, 30)
        pair = FactorPair(args.alpha * gt.u_star, gt.v_star / args.alpha)
        report = hessian_spectrum(pair, gt, noise)
        agreement = None
        if noise is None or not noise.active:
            agreement = abs(report.effective_condition_number - formula) <= 1e-8 * formula
        doc = {
            "schema_version": SCHEMA_VERSION,
            "mode": "alpha",
            "alpha": args.alpha,
            "formula_condition_number": formula,
            "spectrum": {
                "effective_condition_number": report.effective_condition_number,
                "lambda_min": report.lambda_min,
                "lambda_max": report.lambda_max,
                "num_zero_modes": report.num_zero_modes,
                "num_negative": report.num_negative,
            },
            "agreement": agreement,
        }
    else:
        pair = load_factor_pair(args.at)
        if pair.rank == 1:
            gt = GroundTruth.rank1(pair.d1, pair.d2)
        else:
            gt = GroundTruth.identity_blocks(pair.d1, pair.d2, pair.rank)
        result = classify_stationary(pair, gt, noise)
        gamma = None
        if noise is not None and noise.active and noise.sigma2 > 0.0:
            gamma = noise.gamma(pair.d1, pair.d2)
        balance = balancedness(pair, gamma)
        doc = {
            "schema_version": SCHEMA_VERSION,
            "mode": "at",
            "label": result.label.value,
            "grad_norm": result.grad_norm,
            "residuals": result.residuals,
            "gamma_hat": balance.gamma_hat,
            "gram_residual": balance.gram_residual,
        }
    if noise is not None:
        doc["noise"] = {"sigma1": noise.sigma1, "sigma2": noise.sigma2}
    write_json(doc, _out_or_stdout(args.out))
    return 0


def _cmd_phase(args):
    preset = get_preset(args.preset)
    cfg = preset.run_config(seed=args.seed)
    traj = run(cfg, preset.ground_truth())
    t = traj.column("t")
    ratio = traj.column("ratio_sq")
    loss_series = traj.column("loss")
    smoothed = ema(loss_series, 0.99)
    quarter = t >= 0.75 * cfg.horizon
    arg_min = int(ratio.argmin())
    doc = {
        "schema_version": SCHEMA_VERSION,
        "preset": preset.name,
        "seed": args.seed,
        "horizon": cfg.horizon,
        "initial_ratio_sq": float(ratio[0]),
        "min_ratio_sq": float(ratio[arg_min]),
        "min_ratio_t": int(t[arg_min]),
        "final_ratio_sq": float(ratio[-1]),
        "final_loss": float(loss_series[-1]),
        "ema_decay": 0.99,
        "loss_ema_final_quarter_max": float(smoothed[quarter].max()),
        "series": {
            "t": [int(v) for v in t],
            "ratio_sq": [float(v) for v in ratio],
            "loss": [float(v) for v in loss_series],
            "loss_ema": [float(v) for v in smoothed],
        },
    }
    write_json(doc, _out_or_stdout(args.out))
    return 0


def _cmd_verify(args):
    reports = run_verification_suite(seed=args.seed)
    all_passed = all(r.passed for r in reports)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "seed": args.seed,
        "check_count": len(reports),
        "all_passed": all_passed,
        "checks": [dataclasses.asdict(r) for r in reports],
    }
    write_json(doc, _out_or_stdout(args.out))
    if args.out is not None:
        n_ok = sum(r.passed for r in reports)
        print(f"{n_ok}/{len(reports)} checks passed")
    return 0 if all_passed else 3


def _cmd_list_presets(_args):
    rows = [("name", "algo", "size", "rank", "steps", "repeats", "description")]
    for p in PRESETS.values():
        rows.append(
            (
                p.name,
                p.algorithm,
                f"{p.d1}x{p.d2}",
                str(p.rank),
                str(p.horizon),
                str(p.repeats),
                p.description,
            )
        )
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]) - 1)]
    for r in rows:
        lead = "  ".join(c.ljust(w) for c, w in zip(r[:-1], widths))
        print(f"{lead}  {r[-1]}")
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "landscape": _cmd_landscape,
    "phase": _cmd_phase,
    "verify": _cmd_verify,
    "list-presets": _cmd_list_presets,
}


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        for attr in ("seed", "master_seed"):
            value = getattr(args, attr, None)
            if value is not None:
                _check_seed(value)
        return _COMMANDS[args.command](args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except InvalidArgumentError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except NumericalFailureError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except SystemExit as e:
        return int(e.code) if e.code is not None else 0


def console_main():
    sys.exit(main())


if __name__ == "__main__":
    console_main()
