"""Checks for the irrepresentable condition and covariance conditioning."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotPD, SingularGram

GRAM_COND_CAP = 1e12


@dataclass(frozen=True)
class IrrepReport:
    norm_value: float
    satisfied: bool
    signal_set: tuple[int, ...]
    noise_set: tuple[int, ...]

    def to_json(self) -> dict:
        return {
            "norm_value": self.norm_value,
            "satisfied": self.satisfied,
            "signal_set": list(self.signal_set),
            "noise_set": list(self.noise_set),
        }


def irrepresentable_norm(design, signal) -> IrrepReport:
    """``||X_N^T X_S (X_S^T X_S)^{-1}||_inf`` (max absolute row sum).

    ``signal`` holds 0-based column indices; every other column is noise.
    The condition holds when the norm is strictly below 1.
    """
    X = np.asarray(design, dtype=float)
    p = X.shape[1]
    S = sorted({int(j) for j in signal})
    if not S or len(S) >= p:
        raise ValueError("signal set must be a non-empty proper subset of the columns")
    if S[0] < 0 or S[-1] >= p:
        raise ValueError(f"signal indices must lie in [0, {p})")
    N = [j for j in range(p) if j not in set(S)]
    XS, XN = X[:, S], X[:, N]
    gram = XS.T @ XS
    if np.linalg.cond(gram) > GRAM_COND_CAP:
        raise SingularGram("X_S^T X_S is numerically singular")
    # (X_S^T X_S)^{-1} is symmetric, so the product's transpose is a solve.
    M = np.linalg.solve(gram, XS.T @ XN).T
    value = float(np.abs(M).sum(axis=1).max())
    return IrrepReport(value, value < 1.0, tuple(S), tuple(N))


def condition_number(sigma) -> float:
    sigma = np.asarray(sigma, dtype=float)
    w = np.linalg.eigvalsh((sigma + sigma.T) / 2)
    if w[0] <= 0:
        raise NotPD(f"smallest eigenvalue {w[0]:g} is not positive")
    return float(w[-1] / w[0])
