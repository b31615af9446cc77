import io
import json

import numpy as np
import pytest

import mfnoise as mf
from mfnoise import GroundTruth, InvalidArgumentError, NoiseConfig
from mfnoise.serialize import (
    CONFIG_DEFAULTS,
    SCHEMA_VERSION,
    aggregate_stats,
    format_float,
    load_config,
    load_config_bundle,
    load_factor_pair,
    load_sweep_summary,
    parse_config_data,
    read_trajectory_csv,
    trajectory_json_dict,
    write_json,
    write_sweep_json,
    write_trajectory_csv,
)


def _small_traj(seed=3, horizon=120, stride=50):
    gt = GroundTruth.rank1(3, 4)
    cfg = mf.RunConfig(
        algorithm="pgd",
        eta_x=0.01,
        eta_y=0.01,
        horizon=horizon,
        seed=seed,
        init=mf.GaussianInit(0.01, 0.01),
        noise=NoiseConfig(0.05, 0.05),
        record_stride=stride,
    )
    return mf.run(cfg, gt), cfg, gt


def test_format_float_round_trips_exactly():
    for v in (0.1, 1.0 / 3.0, 2.3, -1e-17, 98.0, 6.02e23):
        assert float(format_float(v)) == v
    assert format_float(float("nan")) == ""


def test_csv_round_trip_is_exact():
    traj, _, _ = _small_traj()
    buf = io.StringIO()
    write_trajectory_csv(traj, buf)
    text = buf.getvalue()
    header = text.splitlines()[0]
    assert header == ",".join(mf.DIAGNOSTIC_FIELDS)
    back = read_trajectory_csv(io.StringIO(text))
    assert np.array_equal(back, traj.records)


def test_csv_preserves_nan_as_empty_field():
    gt = GroundTruth.identity_blocks(3, 4, 2)
    cfg = mf.RunConfig(
        algorithm="pgd",
        eta_x=0.01,
        eta_y=0.01,
        horizon=10,
        seed=1,
        init=mf.GaussianInit(0.1, 0.1),
        noise=NoiseConfig.balanced(3, 4, 0.01),
        record_stride=10,
    )
    traj = mf.run(cfg, gt)
    assert np.isnan(traj.records[0][mf.DIAGNOSTIC_FIELDS.index("alpha1")])
    buf = io.StringIO()
    write_trajectory_csv(traj, buf)
    assert ",," in buf.getvalue()
    back = read_trajectory_csv(io.StringIO(buf.getvalue()))
    assert np.isnan(back[0][mf.DIAGNOSTIC_FIELDS.index("alpha1")])
    finite_cols = ~np.isnan(traj.records)
    assert np.array_equal(back[finite_cols], traj.records[finite_cols])


def test_csv_rejects_wrong_header():
    with pytest.raises(InvalidArgumentError):
        read_trajectory_csv(io.StringIO("a,b,c\n1,2,3\n"))


def test_trajectory_json_document():
    traj, cfg, _ = _small_traj()
    doc = trajectory_json_dict(traj)
    assert doc["schema_version"] == SCHEMA_VERSION
    assert doc["fields"] == list(mf.DIAGNOSTIC_FIELDS)
    assert doc["config"]["eta_x"] == cfg.eta_x
    assert doc["config"]["noise"] == {"sigma1": 0.05, "sigma2": 0.05}
    assert len(doc["records"]) == traj.records.shape[0]
    assert doc["records"][0][0] == 0
    assert len(doc["final_state"]["x"]) == 3
    # json stays finite-safe
    buf = io.StringIO()
    write_json(doc, buf)
    json.loads(buf.getvalue())


def test_load_factor_pair():
    buf = io.StringIO(json.dumps({"x": [[3.0]], "y": [[5.0]]}))
    pair = load_factor_pair(buf)
    assert pair.x.item() == 3.0 and pair.y.item() == 5.0
    with pytest.raises(InvalidArgumentError):
        load_factor_pair(io.StringIO(json.dumps({"x": [[1.0]]})))
    with pytest.raises(InvalidArgumentError):
        load_factor_pair(io.StringIO(json.dumps({"x": [[1.0]], "y": [[1.0]], "z": 1})))


def test_parse_config_defaults_only():
    cfg, gt = parse_config_data({})
    assert cfg.algorithm == CONFIG_DEFAULTS["algorithm"]
    assert cfg.horizon == CONFIG_DEFAULTS["horizon"]
    assert (gt.d1, gt.d2, gt.rank) == (20, 30, 1)


def test_parse_config_rejects_unknown_and_bad_values():
    with pytest.raises(InvalidArgumentError) as exc:
        parse_config_data({"bogus": 1})
    assert "bogus" in str(exc.value)
    with pytest.raises(InvalidArgumentError) as exc:
        parse_config_data({"eta_x": -1.0})
    assert "eta_x" in str(exc.value)
    with pytest.raises(InvalidArgumentError) as exc:
        parse_config_data({"horizon": 1.5})
    assert "horizon" in str(exc.value)
    with pytest.raises(InvalidArgumentError):
        parse_config_data({"horizon": True})
    with pytest.raises(InvalidArgumentError) as exc:
        parse_config_data({"noise": {"sigma1": 0.1, "wat": 2}})
    assert "wat" in str(exc.value)


def test_parse_config_overrides_win():
    cfg, _ = parse_config_data({"eta_x": 0.01}, overrides={"eta_x": 0.005, "seed": None})
    assert cfg.eta_x == 0.005
    with pytest.raises(InvalidArgumentError):
        parse_config_data({}, overrides={"napalm": 1})


def test_parse_config_targets():
    _, gt = parse_config_data({"target": {"kind": "identity_blocks", "d1": 4, "d2": 5, "rank": 2}})
    assert (gt.rank, gt.d1, gt.d2) == (2, 4, 5)
    _, gt = parse_config_data(
        {"target": {"kind": "identity_blocks", "d1": 4, "d2": 5, "rank": 2, "sigma": [3.0, 1.0]}}
    )
    assert gt.sigma.tolist() == [3.0, 1.0]
    _, gt = parse_config_data(
        {"target": {"kind": "random_orthonormal", "d1": 6, "d2": 7, "rank": 2, "sigma": [2.0, 1.0], "seed": 9}}
    )
    assert (gt.d1, gt.d2) == (6, 7)
    with pytest.raises(InvalidArgumentError):
        parse_config_data({"target": {"kind": "mystery"}})


def test_parse_config_explicit_init():
    cfg, _ = parse_config_data(
        {
            "target": {"kind": "rank1", "d1": 1, "d2": 1},
            "init": {"kind": "explicit", "x": [[3.0]], "y": [[5.0]]},
        }
    )
    assert isinstance(cfg.init, mf.ExplicitInit)
    assert cfg.init.pair.x.item() == 3.0


def test_load_config_bundle_malformed_json():
    with pytest.raises(InvalidArgumentError):
        load_config_bundle(io.StringIO("{not json"))
    cfg = load_config(io.StringIO("{}"))
    assert cfg.algorithm == CONFIG_DEFAULTS["algorithm"]


def test_aggregate_stats_quartiles():
    stats = aggregate_stats([1.0, 2.0, 3.0, 4.0, 5.0])
    assert stats == {"min": 1.0, "q1": 2.0, "median": 3.0, "q3": 4.0, "max": 5.0}
    with pytest.raises(InvalidArgumentError):
        aggregate_stats([])


def test_sweep_document_round_trip():
    gt = GroundTruth.rank1(2, 3)
    cfg = mf.RunConfig(
        algorithm="pgd",
        eta_x=0.01,
        eta_y=0.01,
        horizon=50,
        seed=0,
        init=mf.GaussianInit(0.01, 0.01),
        noise=NoiseConfig(0.05, 0.05),
        record_stride=25,
    )
    result = mf.run_sweep(cfg, gt, repeats=4, master_seed=9)
    buf = io.StringIO()
    write_sweep_json(result, buf)
    doc = load_sweep_summary(io.StringIO(buf.getvalue()))
    assert doc["repeats"] == 4
    assert len(doc["per_seed"]) == 4
    assert doc["aggregates"].keys() == {"ratio_sq", "loss", "dist_to_opt"}
    # distinct derived seeds
    seeds = [row["seed"] for row in doc["per_seed"]]
    assert len(set(seeds)) == 4
    assert seeds[0] == mf.mix_seed(9, 0)


def test_sweep_summary_rejects_tampered_aggregates():
    gt = GroundTruth.rank1(2, 3)
    cfg = mf.RunConfig(
        algorithm="gd",
        eta_x=0.01,
        eta_y=0.01,
        horizon=50,
        seed=0,
        init=mf.GaussianInit(0.01, 0.01),
        noise=NoiseConfig.none(),
        record_stride=25,
    )
    result = mf.run_sweep(cfg, gt, repeats=3, master_seed=1)
    buf = io.StringIO()
    write_sweep_json(result, buf)
    doc = json.loads(buf.getvalue())
    doc["aggregates"]["loss"]["median"] = 123.0
    with pytest.raises(InvalidArgumentError):
        load_sweep_summary(io.StringIO(json.dumps(doc)))
