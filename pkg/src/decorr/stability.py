"""Stability selection over half-samples and stability-based tuning.

Selection outcomes for one penalty are a B x p binary matrix. Its stability
is ``1 - mean_j(s_j^2) / ((q/p)(1 - q/p))`` where ``s_j^2`` is the unbiased
variance of column j and ``q`` the average number of selected variables; it
is undefined when ``q`` is 0 or p.
"""

from __future__ import annotations

from collections.abc import Mapping
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import NoDefinedStability, NotConverged
from .lasso import (
    DEFAULT_MAX_SWEEPS,
    DEFAULT_TOLERANCE,
    LassoFit,
    RegularizationGrid,
    check_orthonormal,
    lasso_path,
    orthonormal_path,
)
from .data import CoefficientVector

STABLE_THRESHOLD = 0.75
Z95 = 1.959963984540054


@dataclass(frozen=True)
class SelectionMatrix:
    entries: np.ndarray  # B x p, bool
    lam: float
    subsample_ids: np.ndarray | None = None

    @property
    def B(self) -> int:
        return self.entries.shape[0]

    @property
    def p(self) -> int:
        return self.entries.shape[1]

    def frequencies(self) -> np.ndarray:
        return self.entries.mean(axis=0)


class SelectionPath(Mapping):
    """Selection matrices for every grid penalty, keyed by the penalty value."""

    def __init__(self, entries: np.ndarray, grid: RegularizationGrid, plan: np.ndarray):
        self.entries = entries  # G x B x p
        self.grid = grid
        self.plan = plan
        self._index = {float(v): g for g, v in enumerate(grid.values)}

    def __getitem__(self, lam) -> SelectionMatrix:
        g = self._index[float(lam)]
        return self.at(g)

    def at(self, g: int) -> SelectionMatrix:
        return SelectionMatrix(self.entries[g], float(self.grid.values[g]), self.plan)

    def __iter__(self) -> Iterator[float]:
        return iter(self._index)

    def __len__(self) -> int:
        return len(self._index)


@dataclass(frozen=True)
class StabilityProfile:
    lambdas: np.ndarray
    phi: np.ndarray  # nan where undefined
    phi_sd: np.ndarray
    q: np.ndarray
    frequencies: np.ndarray  # G x p


@dataclass(frozen=True)
class TuningResult:
    lambda_stable: float | None
    lambda_stable_1sd: float
    rule_used: str  # "stable" or "stable_1sd"

    @property
    def lam(self) -> float:
        return self.lambda_stable if self.rule_used == "stable" else self.lambda_stable_1sd


def subsample_plan(n: int, B: int, seed) -> np.ndarray:
    """``B`` independent half-samples of ``range(n)``, each sorted, shape ``(B, n // 2)``.

    ``seed`` may be an int, a ``SeedSequence`` or a ``Generator``.
    """
    if n < 4 or B < 1:
        raise ValueError("need n >= 4 and B >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    m = n // 2
    plan = np.empty((B, m), dtype=np.intp)
    for b in range(B):
        plan[b] = np.sort(rng.choice(n, size=m, replace=False))
    return plan


def _fit_subsamples(design, y, lams, plan, start, tolerance, max_sweeps):
    entries = np.zeros((lams.size, plan.shape[0], design.shape[1]), dtype=bool)
    for k, rows in enumerate(plan):
        Xb, yb = design[rows], y[rows]
        if check_orthonormal(Xb):
            coefs = orthonormal_path(Xb, yb, lams)
        else:
            coefs, sweeps, conv = lasso_path(Xb, yb, lams, tolerance, max_sweeps)
            if not conv.all():
                g = int(np.flatnonzero(~conv)[0])
                fit = LassoFit(float(lams[g]), CoefficientVector(coefs[g]), int(sweeps[g]), False)
                raise NotConverged(fit, context=f"subsample {start + k}, lambda index {g}")
        entries[:, k, :] = coefs != 0
    return entries


def run_stability(
    design,
    y,
    grid: RegularizationGrid,
    plan,
    tolerance: float = DEFAULT_TOLERANCE,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
    jobs: int = 1,
) -> SelectionPath:
    """Fit the Lasso path on every half-sample and record the supports.

    Row-subsets of an orthonormal design are generally not orthonormal, so
    each subsample falls back to coordinate descent unless its own columns
    pass the orthonormality check. With ``jobs > 1`` contiguous blocks of
    subsamples go to worker processes; blocks are merged by position, so the
    result does not depend on scheduling.
    """
    design = np.asarray(design, dtype=float)
    y = np.asarray(y, dtype=float)
    plan = np.asarray(plan, dtype=np.intp)
    if plan.ndim != 2:
        raise ValueError("plan must be a B x m index array")
    if plan.size and (plan.min() < 0 or plan.max() >= design.shape[0]):
        raise IndexError("plan indices out of range for the design")
    lams = np.asarray(grid.values)
    B = plan.shape[0]
    if jobs <= 1 or B < 2:
        entries = _fit_subsamples(design, y, lams, plan, 0, tolerance, max_sweeps)
        return SelectionPath(entries, grid, plan)
    bounds = np.linspace(0, B, min(jobs, B) + 1).astype(int)
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        futures = [
            ex.submit(_fit_subsamples, design, y, lams, plan[a:b], int(a), tolerance, max_sweeps)
            for a, b in zip(bounds[:-1], bounds[1:])
        ]
        entries = np.concatenate([f.result() for f in futures], axis=1)
    return SelectionPath(entries, grid, plan)


def _phi_from_counts(col_sums, B, p):
    """Stability from column sums of a binary B x p matrix (vectorized over leading axes)."""
    col_sums = np.asarray(col_sums, dtype=float)
    f = col_sums / B
    q = f.sum(axis=-1)
    s2 = f * (1.0 - f) * (B / (B - 1.0))
    denom = (q / p) * (1.0 - q / p)
    with np.errstate(divide="ignore", invalid="ignore"):
        phi = 1.0 - s2.mean(axis=-1) / denom
    # Exact guard: q is a mean of integers, so 0 and p are hit exactly.
    undefined = (col_sums.sum(axis=-1) == 0) | (col_sums.sum(axis=-1) == B * p)
    return np.where(undefined, np.nan, phi)


def stability_phi(m) -> float:
    """Stability of a selection matrix; ``nan`` when undefined (q = 0 or q = p)."""
    M = m.entries if isinstance(m, SelectionMatrix) else np.asarray(m)
    if M.ndim != 2 or M.shape[0] < 2:
        raise ValueError("stability needs a B x p matrix with B >= 2")
    B, p = M.shape
    return float(_phi_from_counts(M.sum(axis=0), B, p))


def jackknife_sd(m) -> float:
    """Delete-one-row jackknife standard deviation of :func:`stability_phi`.

    Needs ``B >= 3``; returns 0.0 when fewer than two leave-one-out values
    are defined.
    """
    M = np.asarray(m.entries if isinstance(m, SelectionMatrix) else m, dtype=float)
    B, p = M.shape
    if B < 3:
        return 0.0
    loo = _phi_from_counts(M.sum(axis=0)[None, :] - M, B - 1, p)
    loo = loo[np.isfinite(loo)]
    k = loo.size
    if k < 2:
        return 0.0
    return float(np.sqrt((k - 1) / k * np.sum((loo - loo.mean()) ** 2)))


def stability_profile(path: SelectionPath) -> StabilityProfile:
    E = path.entries
    G, B, p = E.shape
    counts = E.sum(axis=1)
    phi = _phi_from_counts(counts, B, p) if B >= 2 else np.full(G, np.nan)
    sd = np.array([jackknife_sd(E[g]) if np.isfinite(phi[g]) else np.nan for g in range(G)])
    q = counts.sum(axis=1) / B
    return StabilityProfile(np.asarray(path.grid.values), phi, sd, q, counts / B)


def tune_lambda(profile: StabilityProfile) -> TuningResult:
    """Pick the stability-based operating penalty.

    ``lambda_stable`` is the smallest penalty with stability above 0.75.
    ``lambda_stable_1sd`` is the smallest penalty whose stability is at least
    the maximum minus the jackknife sd at the maximum (first maximizer in grid
    order). Undefined stabilities are skipped.
    """
    lams = np.asarray(profile.lambdas, dtype=float)
    phi = np.asarray(profile.phi, dtype=float)
    ok = np.isfinite(phi)
    if not ok.any():
        raise NoDefinedStability("stability is undefined at every penalty")
    cand = ok & (phi > STABLE_THRESHOLD)
    lam_stable = float(lams[cand].min()) if cand.any() else None
    g_max = int(np.flatnonzero(ok & (phi == np.nanmax(phi)))[0])
    sd = profile.phi_sd[g_max]
    sd = 0.0 if not np.isfinite(sd) else float(sd)
    within = ok & (phi >= phi[g_max] - sd)
    lam_1sd = float(lams[within].min())
    rule = "stable" if lam_stable is not None else "stable_1sd"
    return TuningResult(lam_stable, lam_1sd, rule)


def select_variables(m, pi_thr: float, ordering=None) -> np.ndarray:
    """Columns selected in at least a ``pi_thr`` fraction of subsamples.

    With ``ordering`` (original index behind each column) the result is
    reported in original indices, sorted ascending.
    """
    if not 0.5 < pi_thr <= 1:
        raise ValueError("pi_thr must lie in (0.5, 1]")
    M = m.entries if isinstance(m, SelectionMatrix) else np.asarray(m)
    cols = np.flatnonzero(M.mean(axis=0) >= pi_thr)
    if ordering is not None:
        cols = np.asarray(ordering)[cols]
    return np.sort(cols)


def convergence_trace(m) -> list[tuple[int, float, float]]:
    """``(b, phi, ci_halfwidth)`` using the first ``b`` rows, for ``b = 2..B``.

    The half-width is 1.96 times the jackknife sd on those rows (``nan`` when
    ``b < 3`` or the stability is undefined, which leaves a gap).
    """
    M = np.asarray(m.entries if isinstance(m, SelectionMatrix) else m)
    B, p = M.shape
    if B < 2:
        raise ValueError("trace needs B >= 2")
    out = []
    for b in range(2, B + 1):
        phi = float(_phi_from_counts(M[:b].sum(axis=0), b, p))
        if np.isfinite(phi) and b >= 3:
            half = Z95 * jackknife_sd(M[:b])
        else:
            half = float("nan")
        out.append((b, phi, half))
    return out
