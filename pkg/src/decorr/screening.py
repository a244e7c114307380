"""Predictor ranking by ridge high-dimensional OLS projection (Ridge-HOLP).

The adaptive variant re-selects the ridge penalty from a fixed candidate grid
so that the projection restricted to the current top set best tracks the
response, iterating until the top set stops changing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import SingularSystem

PENALTY_GRID = np.geomspace(1e-2, 1e4, 20)
DEFAULT_THRESHOLD = 10
DEFAULT_MAX_ITERATIONS = 10
DEFAULT_INITIAL_PENALTY = 10.0


@dataclass(frozen=True)
class Ranking:
    order: np.ndarray  # best predictor first, 0-based column indices
    scores: np.ndarray
    penalty_used: float
    iterations: int

    def top(self, k: int) -> np.ndarray:
        return self.order[:k]


class _Projector:
    """Eigen-decomposition of ``X X^T`` reused across penalties."""

    def __init__(self, X, Y):
        self.X = np.asarray(X, dtype=float)
        gram = self.X @ self.X.T
        s, U = np.linalg.eigh(gram)
        self.s = np.clip(s, 0.0, None)
        self.U = U
        self.UtY = U.T @ np.asarray(Y, dtype=float)
        self._scale = max(float(self.s.max(initial=0.0)), 1.0)

    def coef(self, penalty: float) -> np.ndarray:
        denom = self.s + penalty
        if denom.min() <= 1e-14 * self._scale:
            raise SingularSystem(f"X X^T + {penalty:g} I is numerically singular")
        return self.X.T @ (self.U @ (self.UtY / denom))


def rank_order(scores) -> np.ndarray:
    """Indices sorting ``scores`` descending; ties go to the lower index."""
    scores = np.asarray(scores, dtype=float)
    return np.lexsort((np.arange(scores.size), -scores))


def ridge_holp_scores(d: Dataset, penalty: float) -> np.ndarray:
    """``|X^T (X X^T + penalty I_n)^{-1} Y|`` computed through the n x n system."""
    if not penalty > 0:
        raise ValueError("penalty must be positive")
    return np.abs(_Projector(d.X, d.Y).coef(penalty))


def _best_penalty(proj: _Projector, Y, top) -> float:
    best, best_corr = None, -np.inf
    ynorm = np.linalg.norm(Y)
    for r in PENALTY_GRID:
        beta = proj.coef(r)
        fitted = proj.X[:, top] @ beta[top]
        fnorm = np.linalg.norm(fitted)
        corr = float(Y @ fitted / (ynorm * fnorm)) if fnorm > 0 and ynorm > 0 else -np.inf
        if corr > best_corr:
            best, best_corr = float(r), corr
    return best if best is not None else float(PENALTY_GRID[0])


def adaptive_rank(
    d: Dataset,
    threshold: int = DEFAULT_THRESHOLD,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
    initial_penalty: float = DEFAULT_INITIAL_PENALTY,
) -> Ranking:
    """Rank all ``p`` predictors with a data-adaptive Ridge-HOLP penalty.

    Iteration 1 ranks at ``initial_penalty``. Each further iteration picks the
    grid penalty maximizing ``corr(Y, X_top beta_top)`` for the current
    top-``threshold`` set and re-ranks; the loop stops once that set repeats
    or ``max_iterations`` is reached.
    """
    if not 1 <= threshold <= d.p:
        raise ValueError(f"threshold must lie in [1, {d.p}], got {threshold}")
    if max_iterations < 1:
        raise ValueError("max_iterations must be >= 1")
    if not initial_penalty > 0:
        raise ValueError("initial_penalty must be positive")
    proj = _Projector(d.X, d.Y)
    penalty = float(initial_penalty)
    scores = np.abs(proj.coef(penalty))
    order = rank_order(scores)
    iterations = 1
    top = frozenset(order[:threshold].tolist())
    while iterations < max_iterations:
        penalty = _best_penalty(proj, d.Y, np.sort(order[:threshold]))
        scores = np.abs(proj.coef(penalty))
        order = rank_order(scores)
        iterations += 1
        new_top = frozenset(order[:threshold].tolist())
        if new_top == top:
            break
        top = new_top
    scores.setflags(write=False)
    order.setflags(write=False)
    return Ranking(order, scores, penalty, iterations)
