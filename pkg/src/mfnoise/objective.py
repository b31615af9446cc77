"""The factorization objective F(X, Y) = 0.5 * ||X Y^T - M||_F^2 and its
noise-smoothed counterpart.

Smoothing means taking the expectation of F over per-entry gaussian
perturbations of both factors, which has the closed form

    E F(X + xi1, Y + xi2) = F(X, Y)
        + 0.5 * (d2 sigma2^2 ||X||_F^2 + d1 sigma1^2 ||Y||_F^2
                 + r * d1 sigma1^2 * d2 sigma2^2).

The ridge-like terms are what bias perturbed gradient descent toward
balanced factors.  Gradients, the explicit rank-1 Hessian, and the
rank-general Hessian quadratic form all live here.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InvalidArgumentError,
    UndefinedRatioError,
    UnsupportedRankError,
)
from .linalg import as_matrix
from .rng import Rng


@dataclass
class FactorPair:
    """Left factor x of shape (d1, r) and right factor y of shape (d2, r).

    1-D inputs are treated as single columns, so rank-1 code can pass plain
    vectors.
    """

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.x = as_matrix(self.x, "x")
        self.y = as_matrix(self.y, "y")
        if self.x.shape[1] != self.y.shape[1]:
            raise InvalidArgumentError(
                f"factor ranks differ: x has {self.x.shape[1]} columns, y has {self.y.shape[1]}"
            )

    @property
    def d1(self):
        return self.x.shape[0]

    @property
    def d2(self):
        return self.y.shape[0]

    @property
    def rank(self):
        return self.x.shape[1]

    def stacked(self):
        """The (d1 + d2) x r vertical stack [x; y]."""
        return np.vstack([self.x, self.y])

    def copy(self):
        return FactorPair(self.x.copy(), self.y.copy())


def _orthonormal_error(a):
    r = a.shape[1]
    return float(np.max(np.abs(a.T @ a - np.eye(r))))


@dataclass
class GroundTruth:
    """Target M = a @ diag(sigma) @ b.T with orthonormal a, b columns.

    sigma must be positive and nonincreasing.  Rank-1 targets conventionally
    use sigma = (1,), so M = u* v*^T with unit u*, v*.
    """

    a: np.ndarray
    b: np.ndarray
    sigma: np.ndarray
    m: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.a = as_matrix(self.a, "a")
        self.b = as_matrix(self.b, "b")
        self.sigma = np.asarray(self.sigma, dtype=np.float64).reshape(-1)
        r = self.sigma.size
        if self.a.shape[1] != r or self.b.shape[1] != r:
            raise InvalidArgumentError(
                f"rank mismatch: a {self.a.shape}, b {self.b.shape}, sigma has {r} entries"
            )
        if self.a.shape[0] < r or self.b.shape[0] < r:
            raise InvalidArgumentError("target rank exceeds an ambient dimension")
        if not np.all(np.isfinite(self.sigma)) or np.any(self.sigma <= 0):
            raise InvalidArgumentError("sigma entries must be positive and finite")
        if np.any(np.diff(self.sigma) > 0):
            raise InvalidArgumentError("sigma entries must be nonincreasing")
        for name, mat in (("a", self.a), ("b", self.b)):
            err = _orthonormal_error(mat)
            if err > 1e-10:
                raise InvalidArgumentError(
                    f"{name} columns are not orthonormal (max deviation {err:.3e})"
                )
        self.m = (self.a * self.sigma) @ self.b.T

    @property
    def d1(self):
        return self.a.shape[0]

    @property
    def d2(self):
        return self.b.shape[0]

    @property
    def rank(self):
        return self.sigma.size

    @property
    def u_star(self):
        if self.rank != 1:
            raise UnsupportedRankError("u_star is defined for rank-1 targets only")
        return self.a[:, 0]

    @property
    def v_star(self):
        if self.rank != 1:
            raise UnsupportedRankError("v_star is defined for rank-1 targets only")
        return self.b[:, 0]

    @classmethod
    def rank1(cls, d1, d2):
        """Unit rank-1 target u* v*^T with u* = e1, v* = e1."""
        a = np.zeros((d1, 1))
        a[0, 0] = 1.0
        b = np.zeros((d2, 1))
        b[0, 0] = 1.0
        return cls(a=a, b=b, sigma=np.ones(1))

    @classmethod
    def identity_blocks(cls, d1, d2, rank, sigma=None):
        """Singular vectors fixed to the leading coordinate directions."""
        if sigma is None:
            sigma = np.ones(rank)
        return cls(a=np.eye(d1, rank), b=np.eye(d2, rank), sigma=sigma)

    @classmethod
    def random_orthonormal(cls, d1, d2, rank, sigma, seed):
        """Random target with orthonormal factors drawn from the package stream."""
        rng = Rng(seed)
        a = _random_orthonormal_columns(rng, d1, rank)
        b = _random_orthonormal_columns(rng, d2, rank)
        return cls(a=a, b=b, sigma=sigma)


def _random_orthonormal_columns(rng, d, r):
    # gaussian matrix then modified Gram-Schmidt with one reorthogonalization
    g = np.empty((d, r))
    rng.fill_gaussian(g)
    for j in range(r):
        for _ in range(2):
            for k in range(j):
                g[:, j] -= (g[:, k] @ g[:, j]) * g[:, k]
        nrm = np.linalg.norm(g[:, j])
        if nrm < 1e-8:
            raise InvalidArgumentError("degenerate random draw while orthonormalizing")
        g[:, j] /= nrm
    return g


@dataclass(frozen=True)
class NoiseConfig:
    """Per-entry perturbation scales: xi1 entries ~ N(0, sigma1^2), xi2 ~ N(0, sigma2^2)."""

    sigma1: float = 0.0
    sigma2: float = 0.0

    def __post_init__(self):
        for name in ("sigma1", "sigma2"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise InvalidArgumentError(f"{name} must be finite and nonnegative, got {v}")
            object.__setattr__(self, name, float(v))

    @property
    def active(self):
        return self.sigma1 > 0.0 or self.sigma2 > 0.0

    def total_var_x(self, d1):
        """E ||xi1 column||^2 = d1 sigma1^2, the rank-1 sigma^2 convention."""
        return d1 * self.sigma1**2

    def total_var_y(self, d2):
        """E ||xi2 column||^2 = d2 sigma2^2."""
        return d2 * self.sigma2**2

    def gamma_sq(self, d1, d2):
        """Balance ratio gamma^2 = d1 sigma1^2 / (d2 sigma2^2)."""
        if self.sigma2 == 0.0:
            raise UndefinedRatioError("gamma is undefined when sigma2 = 0")
        return self.total_var_x(d1) / self.total_var_y(d2)

    def gamma(self, d1, d2):
        return float(np.sqrt(self.gamma_sq(d1, d2)))

    @classmethod
    def none(cls):
        return cls(0.0, 0.0)

    @classmethod
    def balanced(cls, d1, d2, total_var):
        """gamma = 1 with d1 sigma1^2 = d2 sigma2^2 = total_var."""
        if total_var <= 0:
            raise InvalidArgumentError("total_var must be positive")
        return cls(float(np.sqrt(total_var / d1)), float(np.sqrt(total_var / d2)))

    @classmethod
    def with_ratio(cls, d1, d2, gamma, total_var_x):
        """Prescribed gamma and sigma^2 = d1 sigma1^2 = total_var_x."""
        if gamma <= 0 or total_var_x <= 0:
            raise InvalidArgumentError("gamma and total_var_x must be positive")
        return cls(
            float(np.sqrt(total_var_x / d1)),
            float(np.sqrt(total_var_x / (gamma**2 * d2))),
        )


def _check_compatible(pair, gt):
    if pair.d1 != gt.d1 or pair.d2 != gt.d2:
        raise InvalidArgumentError(
            f"factor dims ({pair.d1}, {pair.d2}) do not match target dims ({gt.d1}, {gt.d2})"
        )


def residual(pair, gt):
    """x y^T - M."""
    _check_compatible(pair, gt)
    return pair.x @ pair.y.T - gt.m


def loss(pair, gt):
    r = residual(pair, gt)
    return 0.5 * float(np.sum(r * r))


def grad(pair, gt):
    """Gradient pair (R y, R^T x) with R = x y^T - M."""
    r = residual(pair, gt)
    return r @ pair.y, r.T @ pair.x


def smoothed_loss(pair, gt, noise):
    """Closed-form expectation of the loss under factor perturbations."""
    _check_compatible(pair, gt)
    tvx = noise.total_var_x(pair.d1)
    tvy = noise.total_var_y(pair.d2)
    ridge = tvy * float(np.sum(pair.x * pair.x)) + tvx * float(np.sum(pair.y * pair.y))
    return loss(pair, gt) + 0.5 * (ridge + pair.rank * tvx * tvy)


def smoothed_grad(pair, gt, noise):
    """Gradient of smoothed_loss: plain gradient plus diagonal shifts."""
    gx, gy = grad(pair, gt)
    tvx = noise.total_var_x(pair.d1)
    tvy = noise.total_var_y(pair.d2)
    return gx + tvy * pair.x, gy + tvx * pair.y


def hessian_rank1(pair, gt, noise=None):
    """Explicit (d1 + d2) square Hessian of the (smoothed) objective at a rank-1 pair.

    Blocks: [(||y||^2 + d2 sigma2^2) I, 2 x y^T - M; symmetric, (||x||^2 + d1 sigma1^2) I].
    """
    _check_compatible(pair, gt)
    if pair.rank != 1:
        raise UnsupportedRankError("hessian_rank1 needs rank-1 factors")
    x = pair.x[:, 0]
    y = pair.y[:, 0]
    d1, d2 = pair.d1, pair.d2
    tvx = noise.total_var_x(d1) if noise is not None else 0.0
    tvy = noise.total_var_y(d2) if noise is not None else 0.0
    h = np.empty((d1 + d2, d1 + d2))
    h[:d1, :d1] = (float(y @ y) + tvy) * np.eye(d1)
    off = 2.0 * np.outer(x, y) - gt.m
    h[:d1, d1:] = off
    h[d1:, :d1] = off.T
    h[d1:, d1:] = (float(x @ x) + tvx) * np.eye(d2)
    return h


def hessian_quadratic_form(pair, gt, noise, du, dv):
    """Second directional derivative of the smoothed objective along (du, dv).

    Equals 2 <x y^T - M, du dv^T> + ||x dv^T + du y^T||_F^2
    + d2 sigma2^2 ||du||_F^2 + d1 sigma1^2 ||dv||_F^2 for any rank.
    """
    _check_compatible(pair, gt)
    du = as_matrix(du, "du")
    dv = as_matrix(dv, "dv")
    if du.shape != pair.x.shape or dv.shape != pair.y.shape:
        raise InvalidArgumentError(
            f"direction shapes {du.shape}, {dv.shape} do not match factors "
            f"{pair.x.shape}, {pair.y.shape}"
        )
    r = residual(pair, gt)
    cross = pair.x @ dv.T + du @ pair.y.T
    tvx = noise.total_var_x(pair.d1) if noise is not None else 0.0
    tvy = noise.total_var_y(pair.d2) if noise is not None else 0.0
    return (
        2.0 * float(np.sum(r * (du @ dv.T)))
        + float(np.sum(cross * cross))
        + tvy * float(np.sum(du * du))
        + tvx * float(np.sum(dv * dv))
    )
