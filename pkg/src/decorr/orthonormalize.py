"""Gram-Schmidt orthonormalization of a (reordered) design matrix."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .data import Dataset
from .errors import DimensionMismatch, IndexOutOfRange, RankDeficient

Mode = Literal["classical", "modified"]

RANK_TOL = 1e-10


@dataclass(frozen=True)
class QRFactors:
    """``X_ordered = Q @ R`` with orthonormal ``Q`` and upper-triangular ``R``.

    ``ordering`` lists the original (0-based) column index behind each column.
    """

    Q: np.ndarray
    R: np.ndarray
    ordering: np.ndarray
    mode: str

    @property
    def n(self) -> int:
        return self.Q.shape[0]

    @property
    def p(self) -> int:
        return self.Q.shape[1]


def _classical(X, col_norms):
    n, p = X.shape
    Q = np.zeros((n, p))
    R = np.zeros((p, p))
    for j in range(p):
        xj = X[:, j]
        if j:
            # Coefficients are taken against the original column, not the residual.
            R[:j, j] = Q[:, :j].T @ xj
            v = xj - Q[:, :j] @ R[:j, j]
        else:
            v = xj.copy()
        rjj = np.linalg.norm(v)
        if rjj < RANK_TOL * col_norms[j]:
            raise RankDeficient(j)
        R[j, j] = rjj
        Q[:, j] = v / rjj
    return Q, R


def _modified(X, col_norms):
    n, p = X.shape
    V = np.array(X, dtype=float, copy=True)
    Q = np.zeros((n, p))
    R = np.zeros((p, p))
    for j in range(p):
        rjj = np.linalg.norm(V[:, j])
        if rjj < RANK_TOL * col_norms[j]:
            raise RankDeficient(j)
        R[j, j] = rjj
        Q[:, j] = V[:, j] / rjj
        if j + 1 < p:
            R[j, j + 1:] = Q[:, j] @ V[:, j + 1:]
            V[:, j + 1:] -= np.outer(Q[:, j], R[j, j + 1:])
    return Q, R


def gram_schmidt(d: Dataset | np.ndarray, mode: Mode = "classical") -> QRFactors:
    """Orthonormalize the columns of ``d`` left to right.

    ``classical`` follows the textbook recurrence where each projection
    coefficient is computed against the original column; ``modified``
    projects the running residual instead and keeps orthogonality under
    heavier collinearity. Raises :class:`RankDeficient` with the offending
    column when its residual norm drops below ``1e-10`` times its own norm.
    """
    if isinstance(d, Dataset):
        X, ordering = d.X, d.original_index
    else:
        X = np.asarray(d, dtype=float)
        ordering = np.arange(X.shape[1])
    if X.ndim != 2:
        raise DimensionMismatch("design must be 2-d")
    n, p = X.shape
    if p > n:
        raise DimensionMismatch(f"cannot orthonormalize {p} columns in R^{n}; screen to at most {n} first")
    col_norms = np.linalg.norm(X, axis=0)
    zero = np.flatnonzero(col_norms == 0)
    if zero.size:
        raise RankDeficient(int(zero[0]))
    if mode == "classical":
        Q, R = _classical(X, col_norms)
    elif mode == "modified":
        Q, R = _modified(X, col_norms)
    else:
        raise ValueError(f"unknown Gram-Schmidt mode {mode!r}")
    # Norms are non-negative already; the flip only guards the sign convention.
    neg = np.diag(R) < 0
    if neg.any():
        Q[:, neg] *= -1
        R[neg, :] *= -1
    Q.setflags(write=False)
    R.setflags(write=False)
    ordering = np.array(ordering, dtype=np.intp, copy=True)
    ordering.setflags(write=False)
    return QRFactors(Q, R, ordering, mode)


def project_rows(f: QRFactors, row_indices) -> np.ndarray:
    """Rows ``row_indices`` of ``Q``; ``Q[rows] @ R`` reproduces the same rows of X."""
    rows = np.asarray(row_indices, dtype=np.intp).ravel()
    if rows.size and (rows.min() < 0 or rows.max() >= f.n):
        raise IndexOutOfRange(f"row indices must lie in [0, {f.n})")
    if np.unique(rows).size != rows.size:
        raise IndexOutOfRange("row indices must be distinct")
    return f.Q[rows]
