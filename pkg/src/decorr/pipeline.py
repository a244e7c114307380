"""End-to-end selection: rank, reorder, orthonormalize, stability-select.

Three variants share one code path:

``raw``
    stability selection on the standardized design itself;
``decorrelated``
    rank with adaptive Ridge-HOLP, keep the top ``min(p, n - 1)`` columns in
    rank order, Gram-Schmidt them and stability-select on ``Q``;
``decorrelated_no_ordering``
    same without ranking: the first ``min(p, n - 1)`` columns in their
    original order are orthonormalized.

At most ``n - 1`` columns are kept because centered columns live in an
``(n - 1)``-dimensional space. Selection matrices are always reported over
all ``p`` original variables; columns that were screened out are never
selected.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import screening
from .data import Dataset, take_columns
from .lasso import DEFAULT_GRID_COUNT, RegularizationGrid, default_ratio, make_grid
from .orthonormalize import QRFactors, gram_schmidt
from .screening import Ranking
from .stability import (
    SelectionMatrix,
    SelectionPath,
    StabilityProfile,
    TuningResult,
    run_stability,
    stability_profile,
    subsample_plan,
    tune_lambda,
)

PIPELINES = ("raw", "decorrelated", "decorrelated_no_ordering")

_STREAMS = {"data": 0, "plan": 1}


def substream(seed: int, name: str, *keys: int) -> np.random.Generator:
    """Independent generator for a named purpose derived from one integer seed."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(_STREAMS[name], *map(int, keys)))
    return np.random.default_rng(ss)


@dataclass(frozen=True)
class Design:
    matrix: np.ndarray
    ordering: np.ndarray  # original variable index behind each design column
    p_full: int
    ranking: Ranking | None = None
    factors: QRFactors | None = None


@dataclass(frozen=True)
class SelectionResult:
    pipeline: str
    design: Design
    grid: RegularizationGrid
    path: SelectionPath
    profile: StabilityProfile  # over all p original variables
    tuning: TuningResult

    def lambda_index(self, lam: float) -> int:
        return int(np.flatnonzero(self.grid.values == lam)[0])

    def full_matrix(self, lam: float | None = None) -> SelectionMatrix:
        """B x p_full selection matrix in original variable order."""
        lam = self.tuning.lam if lam is None else lam
        g = self.lambda_index(lam)
        return SelectionMatrix(_embed(self.path.entries[g], self.design), float(lam), self.path.plan)

    def frequencies(self, lam: float | None = None) -> np.ndarray:
        lam = self.tuning.lam if lam is None else lam
        return self.profile.frequencies[self.lambda_index(lam)]

    def design_frequencies(self, lam: float | None = None) -> np.ndarray:
        """Frequencies in design-column order (``Q_1, Q_2, ...`` for decorrelated runs)."""
        lam = self.tuning.lam if lam is None else lam
        return self.path.entries[self.lambda_index(lam)].mean(axis=0)


def _embed(entries: np.ndarray, design: Design) -> np.ndarray:
    shape = entries.shape[:-1] + (design.p_full,)
    full = np.zeros(shape, dtype=bool)
    full[..., design.ordering] = entries
    return full


def build_design(
    d: Dataset,
    pipeline: str = "decorrelated",
    threshold: int = screening.DEFAULT_THRESHOLD,
    max_iterations: int = screening.DEFAULT_MAX_ITERATIONS,
    initial_penalty: float = screening.DEFAULT_INITIAL_PENALTY,
    gs_mode: str = "classical",
) -> Design:
    if pipeline not in PIPELINES:
        raise ValueError(f"unknown pipeline {pipeline!r}; choose from {', '.join(PIPELINES)}")
    if pipeline == "raw":
        return Design(np.asarray(d.X), d.original_index.copy(), d.p)
    keep = min(d.p, d.n - 1)
    ranking = None
    if pipeline == "decorrelated":
        ranking = screening.adaptive_rank(d, min(threshold, d.p), max_iterations, initial_penalty)
        cols = ranking.order[:keep]
    else:
        cols = np.arange(keep)
    sub = take_columns(d, cols)
    factors = gram_schmidt(sub, gs_mode)
    return Design(factors.Q, sub.original_index.copy(), d.p, ranking, factors)


def _full_profile(path: SelectionPath, design: Design) -> StabilityProfile:
    if design.matrix.shape[1] == design.p_full and np.array_equal(design.ordering, np.arange(design.p_full)):
        return stability_profile(path)
    full = SelectionPath(_embed(path.entries, design), path.grid, path.plan)
    return stability_profile(full)


def select(
    d: Dataset,
    pipeline: str = "decorrelated",
    B: int = 100,
    seed: int = 0,
    replicate: int = 0,
    plan=None,
    grid_count: int = DEFAULT_GRID_COUNT,
    grid_ratio: float | None = None,
    threshold: int = screening.DEFAULT_THRESHOLD,
    max_iterations: int = screening.DEFAULT_MAX_ITERATIONS,
    gs_mode: str = "classical",
    jobs: int = 1,
) -> SelectionResult:
    """Run one pipeline variant on a standardized dataset.

    The penalty grid is built once on the full design. Its default ratio
    follows the shape of the input data rather than of the (possibly
    screened) design, so all variants of one dataset share it. The subsample
    plan is drawn from the ``plan`` substream of ``seed`` unless given.
    ``jobs`` bounds the worker processes used for the subsample fits.
    """
    design = build_design(d, pipeline, threshold, max_iterations, gs_mode=gs_mode)
    if grid_ratio is None:
        grid_ratio = default_ratio(d.n, d.p)
    grid = make_grid(design.matrix, d.Y, grid_count, grid_ratio)
    if plan is None:
        plan = subsample_plan(d.n, B, substream(seed, "plan", replicate))
    path = run_stability(design.matrix, d.Y, grid, plan, jobs=jobs)
    profile = _full_profile(path, design)
    tuning = tune_lambda(profile)
    return SelectionResult(pipeline, design, grid, path, profile, tuning)
