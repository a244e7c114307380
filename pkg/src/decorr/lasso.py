"""Lasso fits on the objective ``(1/(2n)) ||y - X b||^2 + lam ||b||_1``.

Two solvers share that scale: cyclic coordinate descent for arbitrary
designs and the exact soft-threshold solution for designs with orthonormal
columns. With ``Q^T Q = I`` the per-coordinate problem is
``(1/(2n)) (b^2 - 2 b z) + lam |b|`` with ``z = Q_j^T y``, whose minimizer is
``soft(z, n * lam)``; :func:`orthonormal_lasso` therefore thresholds the
least-squares coefficients at ``n * lam``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .data import CoefficientVector
from .errors import DimensionMismatch, GridDegenerate, NotConverged, NotOrthonormal

DEFAULT_TOLERANCE = 1e-7
DEFAULT_MAX_SWEEPS = 100_000
DEFAULT_GRID_COUNT = 100
ORTHONORMAL_TOL = 1e-6
# Relative slack on the soft-threshold cut so that lambda_max, computed with
# a different summation order, still gives an exactly zero solution.
THRESHOLD_SLACK = 1e-12


@dataclass(frozen=True)
class RegularizationGrid:
    values: np.ndarray  # strictly decreasing
    lambda_max: float
    ratio: float

    @property
    def count(self) -> int:
        return self.values.size

    def __len__(self):
        return self.values.size

    def __iter__(self):
        return iter(self.values.tolist())


@dataclass(frozen=True)
class LassoFit:
    lam: float
    coefficients: CoefficientVector
    iterations: int
    converged: bool
    objective_trace: np.ndarray | None = None


def soft_threshold(z, t):
    z = np.asarray(z, dtype=float)
    return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)


def default_ratio(n: int, p: int) -> float:
    return 1e-2 if p > n else 1e-4


def lasso_objective(X, y, beta, lam) -> float:
    r = y - X @ beta
    return float(r @ r / (2 * X.shape[0]) + lam * np.abs(beta).sum())


def make_grid(X, y, count: int = DEFAULT_GRID_COUNT, ratio: float | None = None) -> RegularizationGrid:
    """Geometric grid from ``lambda_max = max|X^T y| / n`` down to ``lambda_max * ratio``."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    if count < 2:
        raise ValueError("grid needs at least two values")
    if ratio is None:
        ratio = default_ratio(n, p)
    if not 0 < ratio < 1:
        raise ValueError("ratio must lie in (0, 1)")
    lam_max = float(np.max(np.abs(X.T @ y))) / n
    if not lam_max > 0:
        raise GridDegenerate("lambda_max is zero; the response is orthogonal to every column")
    values = np.geomspace(lam_max, lam_max * ratio, count)
    values[0] = lam_max
    values.setflags(write=False)
    return RegularizationGrid(values, lam_max, float(ratio))


@numba.njit(cache=True)
def _sweep(XT, resid, beta, col_sq, lam, inv_n, active_only):
    p, n = XT.shape
    max_delta = 0.0
    for j in range(p):
        cj = col_sq[j]
        if cj == 0.0 or (active_only and beta[j] == 0.0):
            continue
        xj = XT[j]
        dot = 0.0
        for i in range(n):
            dot += xj[i] * resid[i]
        old = beta[j]
        z = dot * inv_n + cj * old
        if abs(z) <= lam * (1.0 + THRESHOLD_SLACK):
            new = 0.0
        elif z > 0.0:
            new = (z - lam) / cj
        else:
            new = (z + lam) / cj
        if new != old:
            delta = new - old
            for i in range(n):
                resid[i] -= delta * xj[i]
            beta[j] = new
            if abs(delta) > max_delta:
                max_delta = abs(delta)
    return max_delta


@numba.njit(cache=True)
def _objective(resid, beta, lam, inv_n):
    rss = 0.0
    for i in range(resid.shape[0]):
        rss += resid[i] * resid[i]
    l1 = 0.0
    for j in range(beta.shape[0]):
        l1 += abs(beta[j])
    return 0.5 * rss * inv_n + lam * l1


@numba.njit(cache=True)
def _cd_kernel(XT, y, lam, beta, resid, col_sq, tol, max_sweeps, history):
    # XT is p x n (rows are columns of X) so inner products are contiguous.
    # Full cyclic sweeps alternate with passes over the current support;
    # convergence is only declared after a full sweep. Every pass counts
    # towards max_sweeps.
    p, n = XT.shape
    inv_n = 1.0 / n
    k = 0
    while k < max_sweeps:
        max_delta = _sweep(XT, resid, beta, col_sq, lam, inv_n, False)
        if history.shape[0] > k:
            history[k] = _objective(resid, beta, lam, inv_n)
        k += 1
        if max_delta < tol:
            return k, True
        while k < max_sweeps:
            inner = _sweep(XT, resid, beta, col_sq, lam, inv_n, True)
            if history.shape[0] > k:
                history[k] = _objective(resid, beta, lam, inv_n)
            k += 1
            if inner < tol:
                break
    return k, False


def _prepare(X, y):
    X = np.asarray(X, dtype=float)
    y = np.ascontiguousarray(y, dtype=float).ravel()
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise DimensionMismatch("X must be n x p with len(y) == n")
    return X, np.ascontiguousarray(X.T), y


def _polish(X, y, beta, lam):
    """Active-set descent step from ``beta``; returns an improved point or None.

    Ill-conditioned supports make plain coordinate descent crawl. With the
    signs of the current support fixed, the objective is a smooth quadratic:
    a rank-deficient support is shrunk along a null direction of ``X_A``
    (residual unchanged, l1 norm decreasing) until a coefficient reaches
    zero; otherwise the quadratic's minimizer is taken, or, if that flips a
    sign, the segment towards it is followed up to the first zero crossing.
    Every move lowers the objective, so coordinate descent resumes from a
    point at least as good; convergence is still judged by a full sweep.
    """
    n = X.shape[0]
    beta = beta.copy()
    moved = False
    for _ in range(beta.size + 1):
        A = np.flatnonzero(beta)
        if A.size == 0:
            break
        XA = X[:, A]
        bA = beta[A]
        signs = np.sign(bA)
        _, sv, Vt = np.linalg.svd(XA, full_matrices=True)
        rank = int(np.sum(sv > 1e-10 * sv[0]))
        if rank < A.size:
            v = Vt[-1]
            if signs @ v < 0:
                v = -v
            with np.errstate(divide="ignore", invalid="ignore"):
                t = np.where(signs * v > 0, bA / v, np.inf)
            k = int(np.argmin(t))
            bA = bA - t[k] * v
            bA[k] = 0.0
            beta[A] = bA
            moved = True
            continue
        try:
            target = np.linalg.solve(XA.T @ XA, XA.T @ y - n * lam * signs)
        except np.linalg.LinAlgError:
            break
        flips = np.sign(target) != signs
        if not flips.any():
            beta[A] = target
            return beta
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(flips, bA / (bA - target), np.inf)
        k = int(np.argmin(t))
        bA = bA + t[k] * (target - bA)
        bA[k] = 0.0
        beta[A] = bA
        moved = True
    return beta if moved else None


_POLISH_EVERY = 100


def _solve(X, XT, y, lam, beta, resid, col_sq, tol, max_sweeps, history):
    done = 0
    while done < max_sweeps:
        budget = min(_POLISH_EVERY, max_sweeps - done)
        k, ok = _cd_kernel(XT, y, lam, beta, resid, col_sq, tol, budget, history[done:] if history.size else history)
        done += k
        if ok:
            return done, True
        cand = _polish(X, y, beta, lam)
        if cand is not None:
            beta[:] = cand
            resid[:] = y - X @ beta
    return done, False


def coordinate_descent(
    X,
    y,
    lam: float,
    tolerance: float = DEFAULT_TOLERANCE,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
    beta0=None,
    trace: bool = False,
) -> LassoFit:
    """Cyclic coordinate descent in fixed order ``0..p-1``.

    Converged means the largest coefficient change over a full sweep fell
    below ``tolerance``. Hitting ``max_sweeps`` raises :class:`NotConverged`
    carrying the partial fit. With ``trace=True`` the objective after every
    sweep is kept on the fit.
    """
    if not tolerance > 0 or max_sweeps < 1:
        raise ValueError("tolerance must be positive and max_sweeps >= 1")
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    X, XT, y = _prepare(X, y)
    n, p = X.shape
    beta = np.zeros(p) if beta0 is None else np.array(beta0, dtype=float, copy=True)
    resid = y - X @ beta
    col_sq = (XT * XT).sum(axis=1) / n
    history = np.full(max_sweeps if trace else 0, np.nan)
    sweeps, ok = _solve(X, XT, y, float(lam), beta, resid, col_sq, float(tolerance), int(max_sweeps), history)
    fit = LassoFit(float(lam), CoefficientVector(beta), int(sweeps), bool(ok),
                   history[:sweeps].copy() if trace else None)
    if not ok:
        raise NotConverged(fit)
    return fit


def lasso_path(X, y, lams, tolerance: float = DEFAULT_TOLERANCE, max_sweeps: int = DEFAULT_MAX_SWEEPS):
    """Warm-started coordinate descent along ``lams`` (in the given order).

    Returns ``(coefs, sweeps, converged)`` with one row of ``coefs`` per lambda.
    Non-convergence is reported through ``converged`` rather than raised.
    """
    X, XT, y = _prepare(X, y)
    lams = np.asarray(lams, dtype=float)
    n, p = X.shape
    coefs = np.zeros((lams.size, p))
    sweeps = np.zeros(lams.size, dtype=np.int64)
    conv = np.zeros(lams.size, dtype=bool)
    col_sq = (XT * XT).sum(axis=1) / n
    beta = np.zeros(p)
    resid = y.copy()
    empty = np.zeros(0)
    for g, lam in enumerate(lams):
        sweeps[g], conv[g] = _solve(X, XT, y, float(lam), beta, resid, col_sq, float(tolerance), int(max_sweeps), empty)
        coefs[g] = beta
    return coefs, sweeps, conv


def check_orthonormal(Q, tol: float = ORTHONORMAL_TOL) -> bool:
    Q = np.asarray(Q, dtype=float)
    gram = Q.T @ Q
    return bool(np.max(np.abs(gram - np.eye(Q.shape[1])), initial=0.0) <= tol)


def orthonormal_lasso(Q, y, lam: float) -> CoefficientVector:
    """Exact Lasso solution for a design with orthonormal columns (no iteration)."""
    Q = np.asarray(Q, dtype=float)
    if not check_orthonormal(Q):
        raise NotOrthonormal("columns are not orthonormal within 1e-6")
    return CoefficientVector(orthonormal_path(Q, y, [lam])[0])


def orthonormal_path(Q, y, lams) -> np.ndarray:
    """Closed-form coefficients for every lambda in ``lams`` (caller checks orthonormality)."""
    Q = np.asarray(Q, dtype=float)
    z = Q.T @ np.asarray(y, dtype=float)
    thresholds = Q.shape[0] * np.asarray(lams, dtype=float)
    out = soft_threshold(z[None, :], thresholds[:, None])
    out[np.abs(z)[None, :] <= thresholds[:, None] * (1 + THRESHOLD_SLACK)] = 0.0
    return out


def kkt_violation(X, y, beta, lam) -> float:
    """Largest deviation from the Lasso optimality conditions at ``beta``."""
    X = np.asarray(X, dtype=float)
    beta = np.asarray(beta, dtype=float)
    grad = X.T @ (np.asarray(y, dtype=float) - X @ beta) / X.shape[0]
    active = beta != 0
    viol = np.zeros_like(grad)
    viol[~active] = np.maximum(np.abs(grad[~active]) - lam, 0.0)
    viol[active] = np.abs(grad[active] - lam * np.sign(beta[active]))
    return float(viol.max(initial=0.0))
