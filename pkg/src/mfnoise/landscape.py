"""Analytic landscape calculus for the factorization objective.

Closed forms implemented here: the condition number of the plain objective
along its optimum family, the full rank-1 Hessian spectrum with zero-mode
accounting, the stationary points of the smoothed objective (rank-1 pair and
the rank-general balanced optimum), orthogonal-Procrustes distance, and a
classifier that matches near-stationary points to the known families.
"""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import (
    DegenerateNoiseError,
    InvalidArgumentError,
    UndefinedRatioError,
    UnsupportedRankError,
)
from .linalg import as_matrix, svd_small, sym_eigen
from .objective import (
    FactorPair,
    _check_compatible,
    grad,
    hessian_rank1,
    residual,
    smoothed_grad,
)


def condition_number_formula(alpha):
    """Effective condition number max(alpha^4, alpha^-4) + 1 at (alpha u*, v*/alpha)."""
    if not np.isfinite(alpha) or alpha == 0.0:
        raise InvalidArgumentError(f"alpha must be finite and nonzero, got {alpha}")
    a4 = float(alpha) ** 4
    return max(a4, 1.0 / a4) + 1.0


@dataclass(frozen=True)
class HessianReport:
    """Spectrum summary with zero modes split out.

    Eigenvalues with magnitude at most zero_tol * max|eigenvalue| count as
    zero modes; the effective condition number is lambda_max over the
    smallest eigenvalue above that threshold (inf when none is).
    """

    eigenvalues: np.ndarray
    lambda_min: float
    lambda_max: float
    zero_tol: float
    num_zero_modes: int
    num_negative: int
    effective_condition_number: float


def hessian_spectrum(pair, gt, noise=None, zero_tol=1e-8):
    """Eigenvalues of the explicit rank-1 Hessian, classified against zero_tol."""
    if not 0.0 < zero_tol < 1.0:
        raise InvalidArgumentError(f"zero_tol must lie in (0, 1), got {zero_tol}")
    h = hessian_rank1(pair, gt, noise)
    values = sym_eigen(h).values
    lam_max = float(values[-1])
    lam_min = float(values[0])
    thresh = zero_tol * max(abs(lam_max), abs(lam_min))
    num_zero = int(np.sum(np.abs(values) <= thresh))
    num_negative = int(np.sum(values < -thresh))
    positive = values[values > thresh]
    kappa = float(lam_max / positive[0]) if positive.size else math.inf
    return HessianReport(
        eigenvalues=values,
        lambda_min=lam_min,
        lambda_max=lam_max,
        zero_tol=zero_tol,
        num_zero_modes=num_zero,
        num_negative=num_negative,
        effective_condition_number=kappa,
    )


@dataclass(frozen=True)
class SmoothedOptima:
    """The +/- pair of smoothed rank-1 optima (alpha1 u*, alpha2 v*)."""

    alpha1: float
    alpha2: float
    plus: FactorPair
    minus: FactorPair


def smoothed_optima_rank1(noise, gt):
    """Rank-1 smoothed optima for a unit target.

    With gamma^2 = d1 sigma1^2 / (d2 sigma2^2) and sigma^2 = d1 sigma1^2 the
    optima are +/- (sqrt(gamma - sigma^2) u*, sqrt(gamma - sigma^2)/gamma v*),
    defined only while sigma^2 < min(gamma, 1).
    """
    if gt.rank != 1:
        raise UnsupportedRankError("smoothed_optima_rank1 needs a rank-1 target")
    if abs(gt.sigma[0] - 1.0) > 1e-12:
        raise InvalidArgumentError("smoothed_optima_rank1 assumes a unit target (sigma = 1)")
    if noise.sigma1 == 0.0 or noise.sigma2 == 0.0:
        raise DegenerateNoiseError("smoothed optima need strictly positive noise on both factors")
    gamma = noise.gamma(gt.d1, gt.d2)
    sigma_sq = noise.total_var_x(gt.d1)
    if sigma_sq >= min(gamma, 1.0):
        raise DegenerateNoiseError(
            f"noise too large: sigma^2 = {sigma_sq:.6g} must be strictly below "
            f"min(gamma, 1) = {min(gamma, 1.0):.6g}"
        )
    alpha1 = math.sqrt(gamma - sigma_sq)
    alpha2 = alpha1 / gamma
    u = gt.u_star
    v = gt.v_star
    return SmoothedOptima(
        alpha1=alpha1,
        alpha2=alpha2,
        plus=FactorPair(alpha1 * u, alpha2 * v),
        minus=FactorPair(-alpha1 * u, -alpha2 * v),
    )


def rankr_balanced_optimum(gt, noise):
    """Balanced stationary pair of the smoothed objective for any rank.

    For noise with ratio gamma and s = d2 sigma2^2 the pair is
    (sqrt(gamma) a (S - gamma s I)^., b (S - gamma s I)^. / sqrt(gamma)),
    requiring gamma * s < min(sigma).  Zero noise returns the balanced plain
    optimum (a S^., b S^.).
    """
    if noise.sigma1 == 0.0 and noise.sigma2 == 0.0:
        root = np.sqrt(gt.sigma)
        return FactorPair(gt.a * root, gt.b * root)
    if noise.sigma1 == 0.0 or noise.sigma2 == 0.0:
        raise DegenerateNoiseError("one-sided noise admits no balanced optimum")
    gamma = noise.gamma(gt.d1, gt.d2)
    s = noise.total_var_y(gt.d2)
    if gamma * s >= float(gt.sigma[-1]):
        raise DegenerateNoiseError(
            f"noise too large: gamma * d2 sigma2^2 = {gamma * s:.6g} must be strictly "
            f"below the smallest target singular value {float(gt.sigma[-1]):.6g}"
        )
    root = np.sqrt(gt.sigma - gamma * s)
    sg = math.sqrt(gamma)
    return FactorPair(sg * (gt.a * root), (gt.b * root) / sg)


@dataclass(frozen=True)
class ProcrustesResult:
    distance: float
    rotation: np.ndarray


def procrustes_distance(d1, d2):
    """min over orthogonal R of ||d1 - d2 R||_F, with the minimizing R.

    R = u v^T from the SVD of d2^T d1; reflections are allowed (full
    orthogonal group).
    """
    d1 = as_matrix(d1, "d1")
    d2 = as_matrix(d2, "d2")
    if d1.shape != d2.shape:
        raise InvalidArgumentError(f"procrustes shapes differ: {d1.shape} vs {d2.shape}")
    f = svd_small(d2.T @ d1)
    rot = f.u @ f.v.T
    dist = float(np.linalg.norm(d1 - d2 @ rot))
    return ProcrustesResult(distance=dist, rotation=rot)


@dataclass(frozen=True)
class BalanceReport:
    gamma_hat: float
    gram_residual: float


def balancedness(pair, gamma=None):
    """Measured norm ratio ||x||_F / ||y||_F and the Gram residual at a reference gamma.

    With gamma omitted the residual is evaluated at the measured ratio.
    """
    nx = float(np.linalg.norm(pair.x))
    ny = float(np.linalg.norm(pair.y))
    if ny == 0.0:
        raise UndefinedRatioError("balancedness is undefined for y = 0")
    gamma_hat = nx / ny
    g = gamma_hat if gamma is None else float(gamma)
    res = float(np.linalg.norm(pair.x.T @ pair.x - g**2 * (pair.y.T @ pair.y)))
    return BalanceReport(gamma_hat=gamma_hat, gram_residual=res)


class StationaryClass(Enum):
    GLOBAL_OPTIMUM_FAMILY = "global_optimum_family"
    SADDLE_FAMILY = "saddle_family"
    SMOOTHED_OPTIMUM = "smoothed_optimum"
    SMOOTHED_SADDLE_ORIGIN = "smoothed_saddle_origin"
    NOT_STATIONARY = "not_stationary"


@dataclass(frozen=True)
class StationaryReport:
    label: StationaryClass
    grad_norm: float
    residuals: dict


def _dist_to_pair_rank1(pair, ref):
    x = pair.x[:, 0]
    y = pair.y[:, 0]
    rx = ref.x[:, 0]
    ry = ref.y[:, 0]
    plus = math.sqrt(float(np.sum((x - rx) ** 2)) + float(np.sum((y - ry) ** 2)))
    minus = math.sqrt(float(np.sum((x + rx) ** 2)) + float(np.sum((y + ry) ** 2)))
    return min(plus, minus)


def classify_stationary(pair, gt, noise=None, tol=1e-6):
    """Match a point to the nearest known stationary family.

    Points whose (smoothed, if noise is active) gradient norm exceeds
    tol * (1 + ||(x, y)||) are NOT_STATIONARY.  Otherwise the label is the
    family with the smallest membership residual; ties resolve to the
    saddle-side label.
    """
    _check_compatible(pair, gt)
    if tol <= 0 or not np.isfinite(tol):
        raise InvalidArgumentError(f"tol must be positive and finite, got {tol}")
    noise_active = noise is not None and noise.active
    if noise_active:
        gx, gy = smoothed_grad(pair, gt, noise)
    else:
        gx, gy = grad(pair, gt)
    gn = math.sqrt(float(np.sum(gx * gx)) + float(np.sum(gy * gy)))
    point_norm = math.sqrt(float(np.sum(pair.x**2)) + float(np.sum(pair.y**2)))
    residuals = {}
    if gn > tol * (1.0 + point_norm):
        return StationaryReport(StationaryClass.NOT_STATIONARY, gn, residuals)

    if noise_active:
        residuals["smoothed_saddle_origin"] = point_norm
        try:
            ref = rankr_balanced_optimum(gt, noise)
            if pair.rank == 1:
                residuals["smoothed_optimum"] = _dist_to_pair_rank1(pair, ref)
            else:
                residuals["smoothed_optimum"] = procrustes_distance(
                    pair.stacked(), ref.stacked()
                ).distance
        except DegenerateNoiseError:
            pass
        opt_res = residuals.get("smoothed_optimum", math.inf)
        if point_norm <= opt_res:
            label = StationaryClass.SMOOTHED_SADDLE_ORIGIN
        else:
            label = StationaryClass.SMOOTHED_OPTIMUM
        return StationaryReport(label, gn, residuals)

    if pair.rank == 1:
        x = pair.x[:, 0]
        y = pair.y[:, 0]
        alpha1 = float(x @ gt.u_star)
        alpha2 = float(y @ gt.v_star)
        beta1_sq = float(x @ x) - alpha1**2
        beta2_sq = float(y @ y) - alpha2**2
        opt_res = math.sqrt(max(beta1_sq, 0.0) + max(beta2_sq, 0.0) + (alpha1 * alpha2 - 1.0) ** 2)
        # families (x, 0) with x _|_ u* and (0, y) with y _|_ v*
        case_y_zero = math.sqrt(float(y @ y) + alpha1**2)
        case_x_zero = math.sqrt(float(x @ x) + alpha2**2)
        saddle_res = min(case_x_zero, case_y_zero)
    else:
        opt_res = float(np.linalg.norm(residual(pair, gt)))
        saddle_res = min(float(np.linalg.norm(pair.x)), float(np.linalg.norm(pair.y)))
    residuals["global_optimum_family"] = opt_res
    residuals["saddle_family"] = saddle_res
    if saddle_res <= opt_res:
        label = StationaryClass.SADDLE_FAMILY
    else:
        label = StationaryClass.GLOBAL_OPTIMUM_FAMILY
    return StationaryReport(label, gn, residuals)
