"""Acceptance gate: one test per shipped guarantee, each printing a PASS/FAIL line.

Every test times itself against the stated budget (kernels are pre-compiled by
the session fixture, so budgets measure algorithm cost, not JIT cost).
"""

import math
import time

import numpy as np

import mfnoise as mf
from mfnoise import (
    DegenerateNoiseError,
    FactorPair,
    GroundTruth,
    NoiseConfig,
    mix_seed,
)
from mfnoise.cli import main as cli_main
from mfnoise.presets import get_preset


def _finish(tag, name, ok, t0, budget_s, detail=""):
    elapsed = time.perf_counter() - t0
    verdict = "PASS" if ok and elapsed < budget_s else "FAIL"
    suffix = f" ({elapsed:.2f}s)" + (f" {detail}" if detail else "")
    print(f"[{tag}] {name}: {verdict}{suffix}")
    assert ok, f"{tag} {name}: {detail}"
    assert elapsed < budget_s, f"{tag} exceeded {budget_s}s budget ({elapsed:.2f}s)"


ALPHAS = (0.25, 0.5, 1.0, 2.0, 4.0)


def test_c1_condition_number_formula(rank1_20x30):
    t0 = time.perf_counter()
    ok = True
    detail = ""
    for alpha in ALPHAS:
        pair = FactorPair(alpha * rank1_20x30.a, (1.0 / alpha) * rank1_20x30.b)
        rep = mf.hessian_spectrum(pair, rank1_20x30)
        expected = max(alpha**4, alpha**-4) + 1.0
        rel = abs(rep.effective_condition_number - expected) / expected
        if rel > 1e-8 or rep.num_zero_modes != 1:
            ok = False
            detail = f"alpha={alpha}: kappa={rep.effective_condition_number} zeros={rep.num_zero_modes}"
            break
    _finish("C1", "optimum family condition number", ok, t0, 1.0, detail)


def test_c2_optimum_spectrum_multiplicities(rank1_20x30):
    t0 = time.perf_counter()
    d1, d2 = 20, 30
    ok = True
    detail = ""
    for alpha in ALPHAS:
        pair = FactorPair(alpha * rank1_20x30.a, (1.0 / alpha) * rank1_20x30.b)
        rep = mf.hessian_spectrum(pair, rank1_20x30)
        lam = np.sort(rep.eigenvalues)
        expected = np.sort(
            np.array(
                [alpha**2 + alpha**-2]
                + [alpha**2] * (d2 - 1)
                + [alpha**-2] * (d1 - 1)
                + [0.0]
            )
        )
        gap = np.max(np.abs(lam - expected))
        if gap > 1e-9:
            ok = False
            detail = f"alpha={alpha}: max eigenvalue gap {gap:.3e}"
            break
    _finish("C2", "optimum spectrum multiplicities", ok, t0, 1.0, detail)


def test_c3_smoothed_optima_stationary_and_boundary(rank1_20x30):
    t0 = time.perf_counter()
    ok = True
    detail = ""
    for gamma, tvx in ((1.0, 0.0975), (math.sqrt(0.5), 0.01)):
        noise = NoiseConfig.with_ratio(20, 30, gamma, tvx)
        opt = mf.smoothed_optima_rank1(noise, rank1_20x30)
        for point in (opt.plus, opt.minus):
            gx, gy = mf.smoothed_grad(point, rank1_20x30, noise)
            gn = math.sqrt(float(np.sum(gx**2) + np.sum(gy**2)))
            if gn > 1e-10:
                ok = False
                detail = f"gamma={gamma}: grad norm {gn:.3e}"
    # boundary sigma^2 = min(gamma, 1), built from exactly representable scales
    boundary_hit = 0
    # gamma = 1, sigma^2 = 1: d1 sigma1^2 = 16/16, d2 sigma2^2 = 4/4
    gt_a = GroundTruth.rank1(16, 4)
    try:
        mf.smoothed_optima_rank1(NoiseConfig(0.25, 0.5), gt_a)
    except DegenerateNoiseError:
        boundary_hit += 1
    # gamma = 0.5, sigma^2 = 0.5: d1 sigma1^2 = 8/16, d2 sigma2^2 = 2
    gt_b = GroundTruth.rank1(8, 8)
    try:
        mf.smoothed_optima_rank1(NoiseConfig(0.25, 0.5), gt_b)
    except DegenerateNoiseError:
        boundary_hit += 1
    if boundary_hit != 2:
        ok = False
        detail = f"boundary raises: {boundary_hit}/2"
    _finish("C3", "smoothed optima stationarity and boundary", ok, t0, 1.0, detail)


def test_c4_origin_is_strict_saddle_of_smoothed_loss():
    t0 = time.perf_counter()
    ok = True
    detail = ""
    for d1, d2, total_var in ((20, 30, 0.075), (6, 7, 0.25), (10, 12, 0.9)):
        gt = GroundTruth.rank1(d1, d2)
        noise = NoiseConfig.balanced(d1, d2, total_var)
        assert noise.total_var_x(d1) * noise.total_var_y(d2) < 1.0
        origin = FactorPair(np.zeros((d1, 1)), np.zeros((d2, 1)))
        rep = mf.hessian_spectrum(origin, gt, noise)
        if not rep.lambda_min < 0.0:
            ok = False
            detail = f"(d1={d1}, tv={total_var}): lambda_min={rep.lambda_min:.3e}"
            break
    _finish("C4", "origin keeps negative curvature under smoothing", ok, t0, 1.0, detail)


def test_c5_balanced_optimum_general_rank():
    t0 = time.perf_counter()
    ok = True
    detail = ""
    targets = (
        GroundTruth.random_orthonormal(6, 8, 2, np.array([2.0, 1.0]), seed=17),
        get_preset("rank3-desk").ground_truth(),
    )
    for gt in targets:
        for gamma in (1.0, math.sqrt(0.5)):
            noise = NoiseConfig.with_ratio(gt.d1, gt.d2, gamma, 0.01)
            opt = mf.rankr_balanced_optimum(gt, noise)
            gx, gy = mf.smoothed_grad(opt, gt, noise)
            gn = math.sqrt(float(np.sum(gx**2) + np.sum(gy**2)))
            gram = opt.x.T @ opt.x - noise.gamma_sq(gt.d1, gt.d2) * (opt.y.T @ opt.y)
            gap = math.sqrt(float(np.sum(gram**2)))
            if gn > 1e-10 or gap > 1e-10:
                ok = False
                detail = f"rank={gt.rank} gamma={gamma}: grad={gn:.3e} gram={gap:.3e}"
    _finish("C5", "balanced optimum stationarity and gram condition", ok, t0, 1.0, detail)


def test_c6_monte_carlo_brackets_smoothed_loss():
    t0 = time.perf_counter()
    ok = True
    detail = ""
    noise = NoiseConfig(0.07, 0.05)
    cases = (
        (GroundTruth.rank1(4, 5), 1),
        (GroundTruth.identity_blocks(5, 6, 2, np.array([2.0, 1.0])), 2),
    )
    rng = np.random.default_rng(0)
    for gt, rank in cases:
        for _ in range(3):
            pair = FactorPair(
                rng.standard_normal((gt.d1, rank)), rng.standard_normal((gt.d2, rank))
            )
            target = mf.smoothed_loss(pair, gt, noise)
            mean, se = mf.monte_carlo_smoothed_loss(pair, gt, noise, 200_000, seed=1)
            if abs(mean - target) > 4.0 * se:
                ok = False
                detail = f"rank={rank}: |{mean:.6f} - {target:.6f}| > 4*{se:.2e}"
    _finish("C6", "Monte-Carlo band around closed-form smoothed loss", ok, t0, 30.0, detail)


def test_c7_gradients_match_central_differences():
    t0 = time.perf_counter()
    worst = 0.0
    rng = np.random.default_rng(7)
    gt = GroundTruth.rank1(5, 6)
    noise = NoiseConfig(0.1, 0.08)
    for kind in ("plain", "smoothed"):
        for _ in range(50):
            pair = FactorPair(rng.standard_normal((5, 1)), rng.standard_normal((6, 1)))
            if kind == "plain":
                gx, gy = mf.grad(pair, gt)
                fx, fy = mf.finite_diff_grad(lambda p: mf.loss(p, gt), pair, 1e-5)
            else:
                gx, gy = mf.smoothed_grad(pair, gt, noise)
                fx, fy = mf.finite_diff_grad(
                    lambda p: mf.smoothed_loss(p, gt, noise), pair, 1e-5
                )
            scale = max(1.0, math.sqrt(float(np.sum(gx**2) + np.sum(gy**2))))
            err = math.sqrt(float(np.sum((fx - gx) ** 2) + np.sum((fy - gy) ** 2))) / scale
            worst = max(worst, err)
    _finish(
        "C7",
        "analytic gradients agree with central differences",
        worst <= 1e-5,
        t0,
        10.0,
        f"worst rel err {worst:.3e}",
    )


def _final_columns(preset_name, repeats):
    res = mf.run_preset_sweep(get_preset(preset_name), repeats=repeats, master_seed=0)
    ratio = np.array([row["ratio_sq"] for row in res.per_seed])
    loss = np.array([row["loss"] for row in res.per_seed])
    return ratio, loss


def test_c8_perturbed_descent_rebalances_rank1():
    t0 = time.perf_counter()
    ratio, loss = _final_columns("fig2a", 100)
    med_ratio = float(np.median(ratio))
    frac = float(np.mean((ratio >= 0.8) & (ratio <= 1.25)))
    med_loss = float(np.median(loss))
    ok = 0.9 <= med_ratio <= 1.1 and frac >= 0.9 and med_loss <= 1e-3
    _finish(
        "C8",
        "perturbed descent reaches balanced optima",
        ok,
        t0,
        300.0,
        f"median ratio_sq={med_ratio:.4f}, in-band {frac:.0%}, median loss={med_loss:.3e}",
    )


def test_c9_plain_descent_inherits_step_ratio():
    t0 = time.perf_counter()
    ratio, _ = _final_columns("fig2f", 100)
    med = float(np.median(ratio))
    _finish(
        "C9",
        "unequal steps leave plain descent sqrt(0.5)-balanced",
        0.35 <= med <= 0.65,
        t0,
        180.0,
        f"median ratio_sq={med:.4f}",
    )


def test_c10_noise_ratio_sets_the_balance_point():
    t0 = time.perf_counter()
    ratio, _ = _final_columns("fig2g", 100)
    med = float(np.median(ratio))
    _finish(
        "C10",
        "gamma^2 = 0.5 noise rebalances to the matching ratio",
        0.35 <= med <= 0.65,
        t0,
        300.0,
        f"median ratio_sq={med:.4f}",
    )


def test_c11_phase_transition_collapse_then_rebalance():
    t0 = time.perf_counter()
    preset = get_preset("phase2d")
    gt = preset.ground_truth()
    ok = True
    detail = ""
    for i in range(50):
        cfg = preset.run_config(seed=mix_seed(0, i))
        traj = mf.run(cfg, gt)
        ratio = traj.column("ratio_sq")
        ts = traj.column("t")
        if ratio[0] != 0.36:
            ok, detail = False, f"seed {i}: t=0 ratio {ratio[0]!r}"
            break
        if ratio.min() > 0.02:
            ok, detail = False, f"seed {i}: min ratio {ratio.min():.4f}"
            break
        if not 0.8 <= ratio[-1] <= 1.25:
            ok, detail = False, f"seed {i}: final ratio {ratio[-1]:.4f}"
            break
        smooth = mf.ema(traj.column("loss"), 0.99)
        tail = smooth[ts >= 0.75 * preset.horizon]
        if tail.max() > 1e-2:
            ok, detail = False, f"seed {i}: tail EMA {tail.max():.3e}"
            break
    _finish("C11", "1-D collapse and rebalance phase transition", ok, t0, 120.0, detail)


def test_c12_rank10_rebalances():
    t0 = time.perf_counter()
    ratio, _ = _final_columns("fig3a", 20)
    med = float(np.median(ratio))
    _finish(
        "C12",
        "rank-10 perturbed descent rebalances",
        0.85 <= med <= 1.18,
        t0,
        600.0,
        f"median ratio_sq={med:.4f}",
    )


def test_c13_procrustes_alignment():
    t0 = time.perf_counter()
    ok = True
    detail = ""
    rng = np.random.default_rng(13)
    for i in range(20):
        r = int(rng.integers(1, 4))
        d = rng.standard_normal((rng.integers(r + 1, 12), r))
        theta = float(rng.uniform(0, 2 * np.pi))
        if r == 1:
            rot = np.array([[rng.choice([-1.0, 1.0])]])
        else:
            c, s = np.cos(theta), np.sin(theta)
            rot = np.eye(r)
            rot[:2, :2] = [[c, -s], [s, c]]
        dist = mf.procrustes_distance(d @ rot, d).distance
        if dist > 1e-9:
            ok, detail = False, f"case {i}: dist {dist:.3e}"
            break
    if ok:
        # brute force over rotations and reflections for r = 2
        d1 = rng.standard_normal((7, 2))
        d2 = rng.standard_normal((7, 2))
        best = np.inf
        for k in range(3600):
            th = 2 * np.pi * k / 3600
            c, s = np.cos(th), np.sin(th)
            for refl in (1.0, -1.0):
                rot = np.array([[c, -s * refl], [s, c * refl]])
                best = min(best, float(np.linalg.norm(d1 - d2 @ rot)))
        dist = mf.procrustes_distance(d1, d2).distance
        if abs(dist - best) > 1e-3:
            ok, detail = False, f"grid {best:.6f} vs svd {dist:.6f}"
    _finish("C13", "rotation-invariant distance via small svd", ok, t0, 10.0, detail)


def test_c14_byte_identical_reruns(tmp_path):
    t0 = time.perf_counter()
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["run", "--preset", "fig2a", "--seed", "1"]
    ok = cli_main(args + ["--out", str(a)]) == 0
    ok = ok and cli_main(args + ["--out", str(b)]) == 0
    ok = ok and a.read_bytes() == b.read_bytes()
    detail = "csv bytes differ" if not ok else ""
    if ok:
        s1, s8 = tmp_path / "s1.json", tmp_path / "s8.json"
        sweep = ["sweep", "--preset", "fig2a", "--repeats", "100", "--master-seed", "0"]
        ok = cli_main(sweep + ["--jobs", "1", "--out", str(s1)]) == 0
        ok = ok and cli_main(sweep + ["--jobs", "8", "--out", str(s8)]) == 0
        ok = ok and s1.read_bytes() == s8.read_bytes()
        if not ok:
            detail = "sweep summaries differ between --jobs 1 and --jobs 8"
    _finish("C14", "reruns and parallel sweeps are byte-identical", ok, t0, 60.0, detail)
