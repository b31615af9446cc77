"""File formats: trajectory CSV/JSON, sweep summaries, run configs.

CSV floats use the shortest representation that parses back to the exact
same double (repr), so written trajectories round-trip bit-for-bit.  JSON
documents carry schema_version 1.  Config parsing is strict: unknown keys
are errors naming the key, and omitted keys fall back to documented
defaults (the balanced-noise rank-1 setup of the fig2a preset).
"""

import json
import math
from pathlib import Path

import numpy as np

from .descent import DIAGNOSTIC_FIELDS, ExplicitInit, GaussianInit, RunConfig
from .errors import InvalidArgumentError
from .objective import FactorPair, GroundTruth, NoiseConfig

SCHEMA_VERSION = 1

CONFIG_DEFAULTS = {
    "algorithm": "pgd",
    "eta_x": 1e-2,
    "eta_y": 1e-2,
    "horizon": 50_000,
    "seed": 0,
    "record_stride": 50,
    "noise": {"sigma1": math.sqrt(1.5) * 0.05, "sigma2": 0.05},
    "init": {"kind": "gaussian", "sigma_x": 1e-2, "sigma_y": 1e-2},
    "target": {"kind": "rank1", "d1": 20, "d2": 30},
}


def format_float(x):
    """Shortest decimal text that parses back to exactly x; nan becomes empty."""
    x = float(x)
    if math.isnan(x):
        return ""
    return repr(x)


def _parse_float(text):
    return math.nan if text == "" else float(text)


def _open_for(target, mode):
    if hasattr(target, "write") or hasattr(target, "read"):
        return target, False
    return open(Path(target), mode, encoding="utf-8", newline=""), True


def write_trajectory_csv(traj, target):
    f, owned = _open_for(target, "w")
    try:
        f.write(",".join(DIAGNOSTIC_FIELDS) + "\n")
        for row in traj.records:
            cells = [str(int(row[0]))]
            cells.extend(format_float(v) for v in row[1:])
            f.write(",".join(cells) + "\n")
    finally:
        if owned:
            f.close()


def read_trajectory_csv(target):
    """Records array from a trajectory CSV; validates the header."""
    f, owned = _open_for(target, "r")
    try:
        lines = f.read().split("\n")
    finally:
        if owned:
            f.close()
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise InvalidArgumentError("empty trajectory file")
    header = tuple(lines[0].split(","))
    if header != DIAGNOSTIC_FIELDS:
        raise InvalidArgumentError(
            f"unexpected trajectory header {header!r}; want {DIAGNOSTIC_FIELDS!r}"
        )
    rows = []
    for line in lines[1:]:
        cells = line.split(",")
        if len(cells) != len(DIAGNOSTIC_FIELDS):
            raise InvalidArgumentError(f"malformed trajectory row: {line!r}")
        rows.append([_parse_float(c) for c in cells])
    return np.array(rows, dtype=np.float64).reshape(len(rows), len(DIAGNOSTIC_FIELDS))


def _json_value(x):
    x = float(x)
    return x if math.isfinite(x) else None


def _init_echo(init):
    if isinstance(init, GaussianInit):
        return {"kind": "gaussian", "sigma_x": init.sigma_x, "sigma_y": init.sigma_y}
    return {
        "kind": "explicit",
        "x": init.pair.x.tolist(),
        "y": init.pair.y.tolist(),
    }


def config_echo(cfg):
    return {
        "algorithm": cfg.algorithm,
        "eta_x": cfg.eta_x,
        "eta_y": cfg.eta_y,
        "horizon": cfg.horizon,
        "seed": cfg.seed,
        "record_stride": cfg.record_stride,
        "noise": {"sigma1": cfg.noise.sigma1, "sigma2": cfg.noise.sigma2},
        "init": _init_echo(cfg.init),
    }


def trajectory_json_dict(traj):
    records = []
    for row in traj.records:
        records.append([int(row[0])] + [_json_value(v) for v in row[1:]])
    return {
        "schema_version": SCHEMA_VERSION,
        "config": config_echo(traj.config),
        "fields": list(DIAGNOSTIC_FIELDS),
        "records": records,
        "final_state": {
            "x": traj.final_state.x.tolist(),
            "y": traj.final_state.y.tolist(),
        },
    }


def write_trajectory_json(traj, target):
    write_json(trajectory_json_dict(traj), target)


def write_json(doc, target):
    f, owned = _open_for(target, "w")
    try:
        json.dump(doc, f, indent=1, allow_nan=False)
        f.write("\n")
    finally:
        if owned:
            f.close()


def load_factor_pair(target):
    """FactorPair from a JSON document with "x" and "y" nested lists."""
    f, owned = _open_for(target, "r")
    try:
        data = json.load(f)
    finally:
        if owned:
            f.close()
    if not isinstance(data, dict):
        raise InvalidArgumentError("factor-pair file must hold a JSON object")
    unknown = set(data) - {"x", "y"}
    if unknown:
        raise InvalidArgumentError(f"unknown factor-pair key {sorted(unknown)[0]!r}")
    if "x" not in data or "y" not in data:
        raise InvalidArgumentError("factor-pair file needs both 'x' and 'y'")
    return FactorPair(np.array(data["x"], dtype=np.float64), np.array(data["y"], dtype=np.float64))


def _require_keys(section, data, allowed, required=()):
    for key in data:
        if key not in allowed:
            raise InvalidArgumentError(f"unknown {section} key {key!r}")
    for key in required:
        if key not in data:
            raise InvalidArgumentError(f"missing {section} key {key!r}")


def _as_int(name, value):
    if isinstance(value, bool):
        raise InvalidArgumentError(f"{name} must be an integer, got {value!r}")
    if isinstance(value, float):
        if not value.is_integer():
            raise InvalidArgumentError(f"{name} must be an integer, got {value!r}")
        value = int(value)
    if not isinstance(value, int):
        raise InvalidArgumentError(f"{name} must be an integer, got {value!r}")
    return value


def _as_float(name, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InvalidArgumentError(f"{name} must be a number, got {value!r}")
    return float(value)


def _parse_init(data):
    kind = data.get("kind", "gaussian")
    if kind == "gaussian":
        _require_keys("init", data, {"kind", "sigma_x", "sigma_y"})
        defaults = CONFIG_DEFAULTS["init"]
        return GaussianInit(
            _as_float("init.sigma_x", data.get("sigma_x", defaults["sigma_x"])),
            _as_float("init.sigma_y", data.get("sigma_y", defaults["sigma_y"])),
        )
    if kind == "explicit":
        _require_keys("init", data, {"kind", "x", "y"}, required=("x", "y"))
        return ExplicitInit(
            FactorPair(
                np.array(data["x"], dtype=np.float64),
                np.array(data["y"], dtype=np.float64),
            )
        )
    raise InvalidArgumentError(f"unknown init kind {kind!r}")


def _parse_target(data):
    kind = data.get("kind", "rank1")
    if kind == "rank1":
        _require_keys("target", data, {"kind", "d1", "d2"})
        defaults = CONFIG_DEFAULTS["target"]
        return GroundTruth.rank1(
            _as_int("target.d1", data.get("d1", defaults["d1"])),
            _as_int("target.d2", data.get("d2", defaults["d2"])),
        )
    if kind == "identity_blocks":
        _require_keys(
            "target", data, {"kind", "d1", "d2", "rank", "sigma"}, required=("d1", "d2", "rank")
        )
        sigma = data.get("sigma")
        if sigma is not None:
            sigma = np.array([_as_float("target.sigma", v) for v in sigma])
        return GroundTruth.identity_blocks(
            _as_int("target.d1", data["d1"]),
            _as_int("target.d2", data["d2"]),
            _as_int("target.rank", data["rank"]),
            sigma,
        )
    if kind == "random_orthonormal":
        _require_keys(
            "target",
            data,
            {"kind", "d1", "d2", "rank", "sigma", "seed"},
            required=("d1", "d2", "rank", "sigma"),
        )
        sigma = np.array([_as_float("target.sigma", v) for v in data["sigma"]])
        return GroundTruth.random_orthonormal(
            _as_int("target.d1", data["d1"]),
            _as_int("target.d2", data["d2"]),
            _as_int("target.rank", data["rank"]),
            sigma,
            seed=_as_int("target.seed", data.get("seed", 0)),
        )
    raise InvalidArgumentError(f"unknown target kind {kind!r}")


def parse_config_data(data, overrides=None):
    """(RunConfig, GroundTruth) from a config dict, strict on unknown keys.

    overrides is a flat mapping of top-level scalar fields (CLI flags) that
    wins over file values.
    """
    if not isinstance(data, dict):
        raise InvalidArgumentError("config must be a JSON object")
    _require_keys("config", data, set(CONFIG_DEFAULTS))
    merged = dict(CONFIG_DEFAULTS)
    merged.update(data)
    scalars = {
        "algorithm": merged["algorithm"],
        "eta_x": merged["eta_x"],
        "eta_y": merged["eta_y"],
        "horizon": merged["horizon"],
        "seed": merged["seed"],
        "record_stride": merged["record_stride"],
    }
    if overrides:
        for key, value in overrides.items():
            if value is None:
                continue
            if key not in scalars:
                raise InvalidArgumentError(f"unknown config override {key!r}")
            scalars[key] = value
    noise_data = merged["noise"]
    if not isinstance(noise_data, dict):
        raise InvalidArgumentError("config key 'noise' must be an object")
    _require_keys("noise", noise_data, {"sigma1", "sigma2"})
    noise = NoiseConfig(
        _as_float("noise.sigma1", noise_data.get("sigma1", 0.0)),
        _as_float("noise.sigma2", noise_data.get("sigma2", 0.0)),
    )
    init_data = merged["init"]
    if not isinstance(init_data, dict):
        raise InvalidArgumentError("config key 'init' must be an object")
    target_data = merged["target"]
    if not isinstance(target_data, dict):
        raise InvalidArgumentError("config key 'target' must be an object")
    algorithm = scalars["algorithm"]
    if not isinstance(algorithm, str):
        raise InvalidArgumentError(f"algorithm must be text, got {algorithm!r}")
    cfg = RunConfig(
        algorithm=algorithm,
        eta_x=_as_float("eta_x", scalars["eta_x"]),
        eta_y=_as_float("eta_y", scalars["eta_y"]),
        horizon=_as_int("horizon", scalars["horizon"]),
        seed=_as_int("seed", scalars["seed"]),
        init=_parse_init(init_data),
        noise=noise,
        record_stride=_as_int("record_stride", scalars["record_stride"]),
    )
    return cfg, _parse_target(target_data)


def load_config_bundle(target, overrides=None):
    f, owned = _open_for(target, "r")
    try:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise InvalidArgumentError(f"malformed config JSON: {e}") from None
    finally:
        if owned:
            f.close()
    return parse_config_data(data, overrides)


def load_config(target):
    """RunConfig from a JSON config file (strict keys, documented defaults)."""
    return load_config_bundle(target)[0]


def aggregate_stats(values):
    """min/q1/median/q3/max with linear interpolation between order stats."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise InvalidArgumentError("cannot aggregate an empty value list")
    q = np.percentile(arr, [0.0, 25.0, 50.0, 75.0, 100.0])
    return {
        "min": float(q[0]),
        "q1": float(q[1]),
        "median": float(q[2]),
        "q3": float(q[3]),
        "max": float(q[4]),
    }

AGGREGATE_FIELDS = ("ratio_sq", "loss", "dist_to_opt")


def sweep_json_dict(result):
    per_seed = []
    for row in result.per_seed:
        entry = {"run_index": row["run_index"], "seed": row["seed"]}
        entry["t"] = row["t"]
        for name in DIAGNOSTIC_FIELDS[1:]:
            entry[name] = _json_value(row[name])
        per_seed.append(entry)
    return {
        "schema_version": SCHEMA_VERSION,
        "preset": result.preset_name,
        "master_seed": result.master_seed,
        "repeats": result.repeats,
        "config": config_echo(result.config),
        "per_seed": per_seed,
        "aggregates": result.aggregates,
    }


def write_sweep_json(result, target):
    write_json(sweep_json_dict(result), target)


def load_sweep_summary(target):
    """Parsed sweep summary; recomputes aggregates and rejects mismatches."""
    f, owned = _open_for(target, "r")
    try:
        data = json.load(f)
    finally:
        if owned:
            f.close()
    if data.get("schema_version") != SCHEMA_VERSION:
        raise InvalidArgumentError(
            f"unsupported sweep schema_version {data.get('schema_version')!r}"
        )
    rows = data.get("per_seed", [])
    if len(rows) != data.get("repeats"):
        raise InvalidArgumentError("sweep summary repeats does not match per-seed row count")
    for name in AGGREGATE_FIELDS:
        values = [row[name] for row in rows]
        if any(v is None for v in values):
            continue
        recomputed = aggregate_stats(values)
        stored = data["aggregates"].get(name)
        if stored is None:
            raise InvalidArgumentError(f"sweep summary misses aggregates for {name!r}")
        for stat, value in recomputed.items():
            ref = stored.get(stat)
            if ref is None or abs(ref - value) > 1e-12 * max(abs(ref), abs(value), 1.0):
                raise InvalidArgumentError(
                    f"sweep aggregate {name}.{stat} inconsistent with per-seed rows"
                )
    return data
