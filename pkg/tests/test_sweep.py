import pytest

import mfnoise as mf
from mfnoise import GroundTruth, InvalidArgumentError, NoiseConfig


def _cfg(horizon=200):
    return mf.RunConfig(
        algorithm="pgd",
        eta_x=0.01,
        eta_y=0.01,
        horizon=horizon,
        seed=0,
        init=mf.GaussianInit(0.01, 0.01),
        noise=NoiseConfig(0.05, 0.05),
        record_stride=100,
    )


def test_sweep_seeds_derived_from_master():
    gt = GroundTruth.rank1(3, 4)
    res = mf.run_sweep(_cfg(), gt, repeats=5, master_seed=42)
    assert res.repeats == 5
    assert [row["seed"] for row in res.per_seed] == [mf.mix_seed(42, i) for i in range(5)]
    assert [row["run_index"] for row in res.per_seed] == list(range(5))


def test_sweep_rows_match_individual_runs():
    gt = GroundTruth.rank1(3, 4)
    res = mf.run_sweep(_cfg(), gt, repeats=3, master_seed=7)
    import dataclasses

    for row in res.per_seed:
        cfg = dataclasses.replace(_cfg(), seed=row["seed"])
        traj = mf.run(cfg, gt)
        assert row["t"] == traj.final.t
        assert row["loss"] == traj.final.loss
        assert row["ratio_sq"] == traj.final.ratio_sq


def test_sweep_jobs_equivalence():
    gt = GroundTruth.rank1(3, 4)
    a = mf.run_sweep(_cfg(), gt, repeats=6, master_seed=1, jobs=1)
    b = mf.run_sweep(_cfg(), gt, repeats=6, master_seed=1, jobs=4)
    assert a.per_seed == b.per_seed
    assert a.aggregates == b.aggregates


def test_sweep_aggregates_match_recomputation():
    gt = GroundTruth.rank1(3, 4)
    res = mf.run_sweep(_cfg(), gt, repeats=5, master_seed=3)
    losses = [row["loss"] for row in res.per_seed]
    assert res.aggregates["loss"] == mf.aggregate_stats(losses)
    assert set(res.aggregates) == {"ratio_sq", "loss", "dist_to_opt"}


def test_sweep_validates_repeats():
    gt = GroundTruth.rank1(2, 2)
    with pytest.raises(InvalidArgumentError):
        mf.run_sweep(_cfg(), gt, repeats=0, master_seed=0)


def test_preset_sweep_uses_preset_repeats_by_default():
    preset = mf.presets.preset_with(mf.presets.get_preset("phase2d"), horizon=100, repeats=2)
    res = mf.run_preset_sweep(preset, master_seed=1)
    assert res.repeats == 2
    assert res.preset_name == "phase2d"
    res = mf.run_preset_sweep(preset, repeats=1, master_seed=1)
    assert res.repeats == 1
