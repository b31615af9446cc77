"""Dense kernels and the two small factorizations the landscape code needs.

Everything here operates on float64 2-D numpy arrays.  The eigensolver is a
cyclic Jacobi iteration (all matrices in this problem are small and
symmetric) and the SVD is one-sided Jacobi with Gram-Schmidt completion of
the left factor for rank-deficient input.  Both are numba-compiled and also
serve the optimizer's inner loop, so there is exactly one implementation of
each.
"""

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import InvalidArgumentError, NumericalFailureError

MAX_EIGEN_DIM = 256
MAX_SVD_DIM = 32
MAX_JACOBI_SWEEPS = 100


def as_matrix(a, name="matrix"):
    """Coerce to a finite float64 2-D array; 1-D input becomes a column."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise InvalidArgumentError(f"{name} must be 1-D or 2-D, got ndim={arr.ndim}")
    if arr.size == 0:
        raise InvalidArgumentError(f"{name} must be nonempty")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{name} contains non-finite entries")
    return arr


def _check_finite_result(out, op):
    if not np.all(np.isfinite(out)):
        raise NumericalFailureError(f"{op} produced non-finite entries")
    return out


def matmul(a, b):
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise InvalidArgumentError(f"matmul shape mismatch: {a.shape} x {b.shape}")
    return _check_finite_result(a @ b, "matmul")


def transpose(a):
    return as_matrix(a, "a").T.copy()


def frobenius_norm(a):
    return float(np.linalg.norm(as_matrix(a, "a")))


def scale_add(alpha, a, beta, b):
    """alpha * a + beta * b for same-shape matrices."""
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape != b.shape:
        raise InvalidArgumentError(f"scale_add shape mismatch: {a.shape} vs {b.shape}")
    return _check_finite_result(float(alpha) * a + float(beta) * b, "scale_add")


def outer_product(u, v):
    u = np.asarray(u, dtype=np.float64).reshape(-1)
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
        raise InvalidArgumentError("outer_product inputs contain non-finite entries")
    return np.outer(u, v)


@njit(cache=True, nogil=True)
def _jacobi_eigh(a, thresh, max_sweeps):
    # cyclic Jacobi on a symmetric matrix, rotations applied while any
    # off-diagonal magnitude exceeds thresh; returns sweeps used, -1 if stalled
    n = a.shape[0]
    v = np.eye(n)
    for sweep in range(max_sweeps):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= thresh:
                    continue
                rotated = True
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if theta >= 0.0:
                    t = 1.0 / (theta + np.sqrt(1.0 + theta * theta))
                else:
                    t = -1.0 / (-theta + np.sqrt(1.0 + theta * theta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                app = a[p, p]
                aqq = a[q, q]
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    if k == p or k == q:
                        continue
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[p, k] = a[k, p]
                    a[k, q] = s * akp + c * akq
                    a[q, k] = a[k, q]
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
        if not rotated:
            return np.diag(a).copy(), v, sweep
    return np.diag(a).copy(), v, -1


@dataclass(frozen=True)
class EigenDecomp:
    """Ascending eigenvalues and the matching orthonormal eigenvector columns."""

    values: np.ndarray
    vectors: np.ndarray


def sym_eigen(s, tol=1e-12):
    """Eigendecomposition of a symmetric matrix via cyclic Jacobi.

    Iterates until every off-diagonal magnitude is at most tol * ||s||_F.
    Raises on non-symmetric input, dimension above 256, or more than 100
    sweeps without convergence.
    """
    s = as_matrix(s, "s")
    n, m = s.shape
    if n != m:
        raise InvalidArgumentError(f"sym_eigen needs a square matrix, got {s.shape}")
    if n > MAX_EIGEN_DIM:
        raise InvalidArgumentError(f"sym_eigen supports dimension <= {MAX_EIGEN_DIM}, got {n}")
    if not np.isfinite(tol) or tol < 0:
        raise InvalidArgumentError(f"tol must be a nonnegative finite real, got {tol}")
    fro = np.linalg.norm(s)
    if np.linalg.norm(s - s.T) > 1e-12 * max(fro, 1.0):
        raise InvalidArgumentError("sym_eigen input is not symmetric")
    work = np.ascontiguousarray(0.5 * (s + s.T))
    values, vectors, sweeps = _jacobi_eigh(work, tol * fro, MAX_JACOBI_SWEEPS)
    if sweeps < 0:
        raise NumericalFailureError(
            f"jacobi eigensolver did not converge within {MAX_JACOBI_SWEEPS} sweeps"
        )
    order = np.argsort(values, kind="stable")
    return EigenDecomp(values=values[order], vectors=vectors[:, order])


@njit(cache=True, nogil=True)
def _onesided_svd(a):
    # one-sided Jacobi: rotate column pairs of a until mutually orthogonal,
    # singular values are the column norms, v accumulates the rotations
    m, n = a.shape
    v = np.eye(n)
    converged = False
    for _ in range(MAX_JACOBI_SWEEPS):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                alpha = 0.0
                beta = 0.0
                gamma = 0.0
                for i in range(m):
                    alpha += a[i, p] * a[i, p]
                    beta += a[i, q] * a[i, q]
                    gamma += a[i, p] * a[i, q]
                if alpha * beta == 0.0 or abs(gamma) <= 1e-14 * np.sqrt(alpha * beta):
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                if zeta >= 0.0:
                    t = 1.0 / (zeta + np.sqrt(1.0 + zeta * zeta))
                else:
                    t = -1.0 / (-zeta + np.sqrt(1.0 + zeta * zeta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                for i in range(m):
                    aip = a[i, p]
                    aiq = a[i, q]
                    a[i, p] = c * aip - s * aiq
                    a[i, q] = s * aip + c * aiq
                for i in range(n):
                    vip = v[i, p]
                    viq = v[i, q]
                    v[i, p] = c * vip - s * viq
                    v[i, q] = s * vip + c * viq
        if not rotated:
            converged = True
            break
    sing = np.empty(n)
    for j in range(n):
        acc = 0.0
        for i in range(m):
            acc += a[i, j] * a[i, j]
        sing[j] = np.sqrt(acc)
    return sing, v, converged


@njit(cache=True, nogil=True)
def _svd_build(a, sing, v):
    # sort descending, normalize left columns, Gram-Schmidt the deficient ones
    m, n = a.shape
    order = np.argsort(-sing, kind="mergesort")
    s_sorted = np.empty(n)
    u = np.empty((m, n))
    v_sorted = np.empty((n, n))
    for jj in range(n):
        j = order[jj]
        s_sorted[jj] = sing[j]
        for i in range(n):
            v_sorted[i, jj] = v[i, j]
        for i in range(m):
            u[i, jj] = a[i, j]
    smax = s_sorted[0]
    cut = smax * 1e-13
    for jj in range(n):
        if s_sorted[jj] > cut and s_sorted[jj] > 0.0:
            inv = 1.0 / s_sorted[jj]
            for i in range(m):
                u[i, jj] *= inv
        else:
            # complete with the unit vector least explained by earlier columns,
            # orthogonalized twice for stability
            best = -1.0
            pick = 0
            for e in range(m):
                resid = 1.0
                for k in range(jj):
                    resid -= u[e, k] * u[e, k]
                if resid > best:
                    best = resid
                    pick = e
            for i in range(m):
                u[i, jj] = 0.0
            u[pick, jj] = 1.0
            for _ in range(2):
                for k in range(jj):
                    dot = 0.0
                    for i in range(m):
                        dot += u[i, k] * u[i, jj]
                    for i in range(m):
                        u[i, jj] -= dot * u[i, k]
                nrm = 0.0
                for i in range(m):
                    nrm += u[i, jj] * u[i, jj]
                nrm = np.sqrt(nrm)
                for i in range(m):
                    u[i, jj] /= nrm
    return u, s_sorted, v_sorted


@dataclass(frozen=True)
class SvdSmall:
    """Thin SVD a = u @ diag(s) @ v.T with s descending and orthonormal u, v columns."""

    u: np.ndarray
    s: np.ndarray
    v: np.ndarray


def svd_small(a):
    """One-sided Jacobi SVD for matrices whose short side is at most 32."""
    a = as_matrix(a, "a")
    m, n = a.shape
    if min(m, n) > MAX_SVD_DIM:
        raise InvalidArgumentError(
            f"svd_small supports min(rows, cols) <= {MAX_SVD_DIM}, got {a.shape}"
        )
    flipped = m < n
    work = np.ascontiguousarray(a.T if flipped else a).copy()
    sing, v, converged = _onesided_svd(work)
    if not converged:
        raise NumericalFailureError(
            f"one-sided jacobi svd did not converge within {MAX_JACOBI_SWEEPS} sweeps"
        )
    u, s, v = _svd_build(work, sing, v)
    if flipped:
        u, v = v, u
    return SvdSmall(u=u, s=s, v=v)
