"""GD and perturbed-GD iteration loops with per-iteration diagnostics.

The whole hot path is compiled: single steps and full runs go through the
same jitted helpers, so a trajectory is a pure, bit-reproducible function of
(config, target).  All matrix products in the loop are explicit scalar loops;
no BLAS call sits between a seed and its iterates.
"""

import math
import time
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import InvalidArgumentError, NumericalFailureError
from .landscape import rankr_balanced_optimum
from .linalg import _onesided_svd
from .objective import FactorPair, GroundTruth, NoiseConfig, _check_compatible
from .rng import Rng, _check_seed, _std_normal

DIAGNOSTIC_FIELDS = (
    "t",
    "loss",
    "smoothed_loss",
    "alpha1",
    "alpha2",
    "beta1_norm",
    "beta2_norm",
    "overlap",
    "ratio_sq",
    "gram_residual",
    "dist_to_opt",
    "norm_sq_sum",
)


@njit(cache=True, nogil=True)
def _frob_sq(a):
    s = 0.0
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            s += a[i, j] * a[i, j]
    return s


@njit(cache=True, nogil=True)
def _residual_into(xt, yt, m, r_buf):
    d1, r = xt.shape
    d2 = yt.shape[0]
    for i in range(d1):
        for j in range(d2):
            acc = 0.0
            for k in range(r):
                acc += xt[i, k] * yt[j, k]
            r_buf[i, j] = acc - m[i, j]


@njit(cache=True, nogil=True)
def _apply_step(x, y, xt, yt, r_buf, eta_x, eta_y):
    # gradient at the perturbed point, update on the unperturbed iterate;
    # returns the entry sum of the new pair as a cheap finiteness probe
    d1, r = x.shape
    d2 = y.shape[0]
    s = 0.0
    for i in range(d1):
        for k in range(r):
            acc = 0.0
            for j in range(d2):
                acc += r_buf[i, j] * yt[j, k]
            x[i, k] -= eta_x * acc
            s += x[i, k]
    for j in range(d2):
        for k in range(r):
            acc = 0.0
            for i in range(d1):
                acc += r_buf[i, j] * xt[i, k]
            y[j, k] -= eta_y * acc
            s += y[j, k]
    return s


@njit(cache=True, nogil=True)
def _perturb_into(state, cache, src, dst, sigma):
    # sigma = 0 copies without touching the stream, so GD and PGD at zero
    # noise share one code path and one stream position
    d, r = src.shape
    if sigma == 0.0:
        for i in range(d):
            for k in range(r):
                dst[i, k] = src[i, k]
    else:
        for i in range(d):
            for k in range(r):
                dst[i, k] = src[i, k] + sigma * _std_normal(state, cache)


@njit(cache=True, nogil=True)
def _record_into(
    row,
    t,
    x,
    y,
    m,
    r_buf,
    u_star,
    v_star,
    rank1,
    m_norm_sq,
    ref_x,
    ref_y,
    ref_norm_sq,
    gamma_sq_ref,
    tvx,
    tvy,
    smooth_const,
    gwork,
):
    # r_buf must hold the residual of the unperturbed (x, y)
    d1, r = x.shape
    d2 = y.shape[0]
    loss = 0.5 * _frob_sq(r_buf)
    nx = _frob_sq(x)
    ny = _frob_sq(y)
    smoothed = loss + 0.5 * (tvy * nx + tvx * ny) + smooth_const
    if rank1:
        a1 = 0.0
        for i in range(d1):
            a1 += x[i, 0] * u_star[i]
        a2 = 0.0
        for j in range(d2):
            a2 += y[j, 0] * v_star[j]
        b1 = math.sqrt(max(nx - a1 * a1, 0.0))
        b2 = math.sqrt(max(ny - a2 * a2, 0.0))
        overlap = 0.0
        for i in range(d1):
            acc = 0.0
            for j in range(d2):
                acc += m[i, j] * y[j, 0]
            overlap += x[i, 0] * acc
    else:
        a1 = np.nan
        a2 = np.nan
        b1 = np.nan
        b2 = np.nan
        overlap = 0.0
        for i in range(d1):
            for j in range(d2):
                overlap += (r_buf[i, j] + m[i, j]) * m[i, j]
        overlap /= m_norm_sq
    if ny > 0.0:
        ratio_sq = nx / ny
    elif nx > 0.0:
        ratio_sq = np.inf
    else:
        ratio_sq = np.nan
    gram = 0.0
    for a in range(r):
        for b in range(r):
            g1 = 0.0
            for i in range(d1):
                g1 += x[i, a] * x[i, b]
            g2 = 0.0
            for j in range(d2):
                g2 += y[j, a] * y[j, b]
            diff = g1 - gamma_sq_ref * g2
            gram += diff * diff
    gram = math.sqrt(gram)
    if rank1:
        dp = 0.0
        dm = 0.0
        for i in range(d1):
            dp += (x[i, 0] - ref_x[i, 0]) ** 2
            dm += (x[i, 0] + ref_x[i, 0]) ** 2
        dp = math.sqrt(dp)
        dm = math.sqrt(dm)
        ep = 0.0
        em = 0.0
        for j in range(d2):
            ep += (y[j, 0] - ref_y[j, 0]) ** 2
            em += (y[j, 0] + ref_y[j, 0]) ** 2
        dist = min(dp + math.sqrt(ep), dm + math.sqrt(em))
    else:
        for a in range(r):
            for b in range(r):
                acc = 0.0
                for i in range(d1):
                    acc += ref_x[i, a] * x[i, b]
                for j in range(d2):
                    acc += ref_y[j, a] * y[j, b]
                gwork[a, b] = acc
        sing, _v, _conv = _onesided_svd(gwork)
        ssum = 0.0
        for a in range(r):
            ssum += sing[a]
        dist = math.sqrt(max(nx + ny + ref_norm_sq - 2.0 * ssum, 0.0))
    row[0] = t
    row[1] = loss
    row[2] = smoothed
    row[3] = a1
    row[4] = a2
    row[5] = b1
    row[6] = b2
    row[7] = overlap
    row[8] = ratio_sq
    row[9] = gram
    row[10] = dist
    row[11] = nx + ny


@njit(cache=True, nogil=True)
def _run_kernel(
    x,
    y,
    m,
    eta_x,
    eta_y,
    sigma1,
    sigma2,
    horizon,
    stride,
    state,
    cache,
    u_star,
    v_star,
    rank1,
    m_norm_sq,
    ref_x,
    ref_y,
    ref_norm_sq,
    gamma_sq_ref,
    tvx,
    tvy,
    smooth_const,
    xt,
    yt,
    r_buf,
    gwork,
    records,
):
    row_idx = 0
    _residual_into(x, y, m, r_buf)
    _record_into(
        records[row_idx], 0.0, x, y, m, r_buf, u_star, v_star, rank1, m_norm_sq,
        ref_x, ref_y, ref_norm_sq, gamma_sq_ref, tvx, tvy, smooth_const, gwork,
    )
    row_idx += 1
    for t in range(1, horizon + 1):
        _perturb_into(state, cache, x, xt, sigma1)
        _perturb_into(state, cache, y, yt, sigma2)
        _residual_into(xt, yt, m, r_buf)
        s = _apply_step(x, y, xt, yt, r_buf, eta_x, eta_y)
        if not np.isfinite(s):
            return t
        if t % stride == 0 or t == horizon:
            _residual_into(x, y, m, r_buf)
            _record_into(
                records[row_idx], float(t), x, y, m, r_buf, u_star, v_star,
                rank1, m_norm_sq, ref_x, ref_y, ref_norm_sq, gamma_sq_ref,
                tvx, tvy, smooth_const, gwork,
            )
            row_idx += 1
    return -1


@dataclass(frozen=True)
class GaussianInit:
    """Entrywise N(0, sigma_x^2) / N(0, sigma_y^2) initialization."""

    sigma_x: float
    sigma_y: float

    def __post_init__(self):
        for name, s in (("sigma_x", self.sigma_x), ("sigma_y", self.sigma_y)):
            if not np.isfinite(s) or s < 0:
                raise InvalidArgumentError(f"{name} must be finite and >= 0, got {s}")


@dataclass(frozen=True)
class ExplicitInit:
    pair: FactorPair


ALGORITHMS = ("gd", "pgd")


@dataclass(frozen=True)
class RunConfig:
    algorithm: str
    eta_x: float
    eta_y: float
    horizon: int
    seed: int
    init: object
    noise: NoiseConfig
    record_stride: int = 50

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise InvalidArgumentError(
                f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}"
            )
        for name, eta in (("eta_x", self.eta_x), ("eta_y", self.eta_y)):
            if not np.isfinite(eta) or eta <= 0:
                raise InvalidArgumentError(f"{name} must be finite and > 0, got {eta}")
        if not isinstance(self.horizon, int) or isinstance(self.horizon, bool) or self.horizon < 0:
            raise InvalidArgumentError(f"horizon must be an integer >= 0, got {self.horizon!r}")
        if (
            not isinstance(self.record_stride, int)
            or isinstance(self.record_stride, bool)
            or self.record_stride < 1
        ):
            raise InvalidArgumentError(
                f"record_stride must be an integer >= 1, got {self.record_stride!r}"
            )
        _check_seed(self.seed)
        if not isinstance(self.init, (GaussianInit, ExplicitInit)):
            raise InvalidArgumentError("init must be a GaussianInit or ExplicitInit")
        if not isinstance(self.noise, NoiseConfig):
            raise InvalidArgumentError("noise must be a NoiseConfig")
        if self.algorithm == "gd" and self.noise.active:
            raise InvalidArgumentError(
                "gd takes no perturbation; use algorithm 'pgd' or zero noise"
            )


@dataclass(frozen=True)
class IterateDiagnostics:
    t: int
    loss: float
    smoothed_loss: float
    alpha1: float
    alpha2: float
    beta1_norm: float
    beta2_norm: float
    overlap: float
    ratio_sq: float
    gram_residual: float
    dist_to_opt: float
    norm_sq_sum: float


@dataclass(frozen=True)
class Trajectory:
    """Recorded run: diagnostics rows (one per recorded t), final iterate.

    records is an (n, 12) float array in DIAGNOSTIC_FIELDS column order;
    wall_time is informational only and never serialized.
    """

    config: RunConfig
    records: np.ndarray
    final_state: FactorPair
    wall_time: float

    def column(self, name):
        return self.records[:, DIAGNOSTIC_FIELDS.index(name)]

    @property
    def final(self):
        row = self.records[-1]
        return IterateDiagnostics(int(row[0]), *(float(v) for v in row[1:]))


def _resolve_reference(gt, noise):
    """Distance reference and gamma^2 used by the gram residual.

    Active noise compares against the smoothed balanced optimum at the noise
    ratio; zero noise against the balanced plain optimum at gamma = 1.
    One-sided noise has no reference and is rejected upstream.
    """
    if noise.active:
        ref = rankr_balanced_optimum(gt, noise)
        gamma_sq = noise.gamma_sq(gt.d1, gt.d2)
    else:
        root = np.sqrt(gt.sigma)
        ref = FactorPair(gt.a * root, gt.b * root)
        gamma_sq = 1.0
    return ref, gamma_sq


def _record_args(gt, noise, ref, gamma_sq):
    rank1 = gt.rank == 1
    u = gt.a[:, 0].copy() if rank1 else np.zeros(gt.d1)
    v = gt.b[:, 0].copy() if rank1 else np.zeros(gt.d2)
    tvx = noise.total_var_x(gt.d1)
    tvy = noise.total_var_y(gt.d2)
    smooth_const = 0.5 * gt.rank * tvx * tvy
    ref_norm_sq = float(np.sum(ref.x**2) + np.sum(ref.y**2))
    m_norm_sq = float(np.sum(gt.m**2))
    return rank1, u, v, m_norm_sq, ref_norm_sq, tvx, tvy, smooth_const


def run(cfg, gt):
    """Iterate cfg.horizon steps from the seeded initialization.

    Records diagnostics at t = 0, every record_stride, and at the final
    iterate.  A non-finite iterate aborts with the failing iteration index.
    """
    if not isinstance(gt, GroundTruth):
        raise InvalidArgumentError("gt must be a GroundTruth")
    start = time.perf_counter()
    r = gt.rank
    if isinstance(cfg.init, ExplicitInit):
        pair = cfg.init.pair
        _check_compatible(pair, gt)
        x = pair.x.copy()
        y = pair.y.copy()
        rng = Rng(cfg.seed)
    else:
        rng = Rng(cfg.seed)
        x = np.empty((gt.d1, r))
        y = np.empty((gt.d2, r))
        rng.fill_gaussian(x, 0.0, cfg.init.sigma_x)
        rng.fill_gaussian(y, 0.0, cfg.init.sigma_y)
    ref, gamma_sq = _resolve_reference(gt, cfg.noise)
    rank1, u, v, m_norm_sq, ref_norm_sq, tvx, tvy, smooth_const = _record_args(
        gt, cfg.noise, ref, gamma_sq
    )
    horizon = cfg.horizon
    stride = cfg.record_stride
    n_rec = 1 + horizon // stride + (1 if horizon % stride != 0 else 0)
    records = np.empty((n_rec, 12))
    state, cache = rng._buffers()
    fail_t = _run_kernel(
        x, y, gt.m, cfg.eta_x, cfg.eta_y, cfg.noise.sigma1, cfg.noise.sigma2,
        horizon, stride, state, cache, u, v, rank1, m_norm_sq,
        ref.x, ref.y, ref_norm_sq, gamma_sq, tvx, tvy, smooth_const,
        np.empty((gt.d1, r)), np.empty((gt.d2, r)), np.empty((gt.d1, gt.d2)),
        np.empty((r, r)), records,
    )
    if fail_t >= 0:
        raise NumericalFailureError(
            f"non-finite iterate at iteration {fail_t}", iteration=int(fail_t)
        )
    return Trajectory(
        config=cfg,
        records=records,
        final_state=FactorPair(x, y),
        wall_time=time.perf_counter() - start,
    )


def diagnostics(pair, gt, noise):
    """The full diagnostic record for a single pair (t reported as 0)."""
    _check_compatible(pair, gt)
    if not isinstance(noise, NoiseConfig):
        raise InvalidArgumentError("noise must be a NoiseConfig")
    ref, gamma_sq = _resolve_reference(gt, noise)
    rank1, u, v, m_norm_sq, ref_norm_sq, tvx, tvy, smooth_const = _record_args(
        gt, noise, ref, gamma_sq
    )
    r = gt.rank
    row = np.empty(12)
    r_buf = np.empty((gt.d1, gt.d2))
    x = np.ascontiguousarray(pair.x)
    y = np.ascontiguousarray(pair.y)
    _residual_into(x, y, gt.m, r_buf)
    _record_into(
        row, 0.0, x, y, gt.m, r_buf, u, v, rank1, m_norm_sq,
        ref.x, ref.y, ref_norm_sq, gamma_sq, tvx, tvy, smooth_const,
        np.empty((r, r)),
    )
    return IterateDiagnostics(0, *(float(val) for val in row[1:]))


def gd_step(pair, gt, eta_x, eta_y):
    """One plain gradient step with per-factor step sizes."""
    zero1 = np.zeros_like(pair.x)
    zero2 = np.zeros_like(pair.y)
    return pgd_step_with_noise(pair, gt, zero1, zero2, eta_x, eta_y)


def pgd_step_with_noise(pair, gt, xi1, xi2, eta_x, eta_y):
    """One perturbed step with caller-supplied perturbations (test hook).

    The gradient is evaluated at (x + xi1, y + xi2) and applied to (x, y).
    """
    _check_compatible(pair, gt)
    for name, eta in (("eta_x", eta_x), ("eta_y", eta_y)):
        if not np.isfinite(eta) or eta <= 0:
            raise InvalidArgumentError(f"{name} must be finite and > 0, got {eta}")
    xi1 = np.asarray(xi1, dtype=np.float64)
    xi2 = np.asarray(xi2, dtype=np.float64)
    if xi1.shape != pair.x.shape or xi2.shape != pair.y.shape:
        raise InvalidArgumentError(
            f"perturbation shapes {xi1.shape}, {xi2.shape} do not match factors "
            f"{pair.x.shape}, {pair.y.shape}"
        )
    x = np.ascontiguousarray(pair.x).copy()
    y = np.ascontiguousarray(pair.y).copy()
    xt = x + xi1
    yt = y + xi2
    r_buf = np.empty((gt.d1, gt.d2))
    _residual_into(xt, yt, gt.m, r_buf)
    s = _apply_step(x, y, xt, yt, r_buf, eta_x, eta_y)
    if not np.isfinite(s):
        raise NumericalFailureError("non-finite iterate after one step", iteration=1)
    return FactorPair(x, y)


def pgd_step(pair, gt, noise, eta_x, eta_y, rng):
    """One perturbed step drawing xi1 then xi2 (row-major) from rng."""
    if not isinstance(noise, NoiseConfig):
        raise InvalidArgumentError("noise must be a NoiseConfig")
    if not isinstance(rng, Rng):
        raise InvalidArgumentError("rng must be an Rng")
    xi1 = np.zeros_like(pair.x)
    xi2 = np.zeros_like(pair.y)
    rng.fill_gaussian(xi1, 0.0, noise.sigma1)
    rng.fill_gaussian(xi2, 0.0, noise.sigma2)
    return pgd_step_with_noise(pair, gt, xi1, xi2, eta_x, eta_y)


def ema(series, decay):
    """Exponential moving average: s_0 = x_0, s_t = decay*s_{t-1} + (1-decay)*x_t."""
    if not np.isfinite(decay) or not 0.0 <= decay < 1.0:
        raise InvalidArgumentError(f"decay must lie in [0, 1), got {decay}")
    arr = np.asarray(series, dtype=np.float64)
    if arr.ndim != 1:
        raise InvalidArgumentError(f"series must be 1-D, got shape {arr.shape}")
    out = np.empty_like(arr)
    if arr.size == 0:
        return out
    acc = arr[0]
    out[0] = acc
    w = 1.0 - decay
    for i in range(1, arr.size):
        acc = decay * acc + w * arr[i]
        out[i] = acc
    return out
