"""Synthetic block-correlated regression scenarios and F1 evaluation."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from functools import partial
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import standardize
from .errors import DecorrError, ExperimentFailed, NotRepairable, UndefinedTruth
from .pipeline import PIPELINES, select, subsample_plan, substream

log = logging.getLogger(__name__)

PI_GRID = tuple(round(0.6 + 0.05 * k, 2) for k in range(7))
EIG_FLOOR = 1e-8
MAX_FAILURE_FRACTION = 0.2

BLOCK_RHO = (0.2, 0.4, 0.6, 0.8, 0.9)
BLOCK_BETA = (4.0, 3.5, 3.0, 2.5, 2.0)


@dataclass(frozen=True)
class ScenarioConfig:
    """Declarative synthetic experiment.

    ``groups`` holds ``(start, stop, rho)`` with 0-based half-open ranges
    that partition ``range(p)``. ``active_rule`` is ``"lowest_index"``,
    ``"highest_index"`` (one active variable per group) or an explicit list
    of 0-based indices.
    """

    n: int
    p: int
    groups: tuple
    active_rule: str | tuple = "lowest_index"
    beta: tuple = BLOCK_BETA
    noise_sd: float = 1.0
    seed: int = 0
    B: int = 100
    dataset_count: int = 100
    name: str = "custom"

    def __post_init__(self):
        groups = tuple((int(a), int(b), float(r)) for a, b, r in self.groups)
        object.__setattr__(self, "groups", groups)
        rule = self.active_rule
        if not isinstance(rule, str):
            object.__setattr__(self, "active_rule", tuple(int(i) for i in rule))
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        self.validate()

    def validate(self):
        if self.n < 4 or self.p < 1:
            raise ValueError("scenario needs n >= 4 and p >= 1")
        pos = 0
        for a, b, rho in self.groups:
            if a != pos or b <= a:
                raise ValueError("groups must be consecutive, non-empty and start at 0")
            if not -1 < rho < 1:
                raise ValueError(f"group correlation {rho} outside (-1, 1)")
            pos = b
        if pos != self.p:
            raise ValueError(f"groups cover {pos} variables, expected {self.p}")
        if isinstance(self.active_rule, str) and self.active_rule not in ("lowest_index", "highest_index"):
            raise ValueError(f"unknown active rule {self.active_rule!r}")
        active = self.active_indices()
        if len(active) != len(self.beta):
            raise ValueError(f"{len(active)} active variables but {len(self.beta)} coefficients")
        if any(not 0 <= i < self.p for i in active) or len(set(active)) != len(active):
            raise ValueError("active indices must be distinct and inside range(p)")
        if not self.noise_sd > 0 or self.B < 1 or self.dataset_count < 1:
            raise ValueError("noise_sd, B and dataset_count must be positive")

    def active_indices(self) -> tuple[int, ...]:
        if self.active_rule == "lowest_index":
            return tuple(a for a, _, _ in self.groups)
        if self.active_rule == "highest_index":
            return tuple(b - 1 for _, b, _ in self.groups)
        return tuple(self.active_rule)

    def beta_full(self) -> np.ndarray:
        beta = np.zeros(self.p)
        beta[list(self.active_indices())] = self.beta
        return beta

    def to_json(self) -> dict:
        d = asdict(self)
        d["groups"] = [{"start": a, "stop": b, "rho": r} for a, b, r in self.groups]
        d["active_rule"] = self.active_rule if isinstance(self.active_rule, str) else list(self.active_rule)
        d["beta"] = list(self.beta)
        return d

    @classmethod
    def from_json(cls, obj: dict) -> "ScenarioConfig":
        obj = dict(obj)
        groups = []
        for g in obj.pop("groups"):
            groups.append((g["start"], g["stop"], g["rho"]) if isinstance(g, dict) else tuple(g))
        known = {f for f in cls.__dataclass_fields__}
        extra = set(obj) - known
        if extra:
            raise ValueError(f"unknown scenario fields: {', '.join(sorted(extra))}")
        return cls(groups=tuple(groups), **obj)


def equal_groups(p: int, rhos: Sequence[float]) -> tuple:
    k = len(rhos)
    if p % k:
        raise ValueError(f"p={p} is not divisible into {k} groups")
    size = p // k
    return tuple((g * size, (g + 1) * size, float(r)) for g, r in enumerate(rhos))


def _block(n, p, rhos, rule, name, **kw):
    return ScenarioConfig(n=n, p=p, groups=equal_groups(p, rhos), active_rule=rule, name=name, **kw)


def preset(name: str, desk: bool = False) -> ScenarioConfig:
    """Built-in scenarios. ``desk=True`` shrinks the high-dimensional ones to
    p = 100 (groups of 20) and 20 datasets for quick reproduction."""
    p_hd = 100 if desk else 500
    count = 20 if desk else 100
    if name == "scenario1":
        return _block(50, p_hd, BLOCK_RHO, "lowest_index", name, dataset_count=count)
    if name == "scenario2":
        return _block(50, p_hd, BLOCK_RHO, "highest_index", name, dataset_count=count)
    if name == "negative_signs":
        return _block(50, p_hd, tuple(-r for r in BLOCK_RHO), "highest_index", name, dataset_count=count)
    if name == "mixed_signs":
        return _block(50, p_hd, (0.2, -0.4, 0.6, -0.8, 0.9), "highest_index", name, dataset_count=count)
    if name == "lowdim20":
        return _block(50, 20, BLOCK_RHO, "highest_index", name, dataset_count=count)
    if name == "corollary2_toy":
        # 0.95 stands in for "highly correlated"; no value is prescribed.
        return ScenarioConfig(
            n=200, p=3, groups=((0, 2, 0.95), (2, 3, 0.0)), active_rule=(0, 1, 2),
            beta=(2.0, 2.0, 1.0), dataset_count=20, name=name,
        )
    raise KeyError(name)


PRESETS = ("scenario1", "scenario2", "negative_signs", "mixed_signs", "lowdim20", "corollary2_toy")


def nearest_pd(m) -> np.ndarray:
    """Floor eigenvalues at 1e-8, rebuild, and rescale back to unit diagonal."""
    m = np.asarray(m, dtype=float)
    m = (m + m.T) / 2
    w, V = np.linalg.eigh(m)
    A = (V * np.maximum(w, EIG_FLOOR)) @ V.T
    s = 1.0 / np.sqrt(np.diag(A))
    A = A * s[:, None] * s[None, :]
    A = (A + A.T) / 2
    np.fill_diagonal(A, 1.0)
    return A


def _is_pd(m) -> bool:
    try:
        np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        return False
    return bool(np.linalg.eigvalsh(m).min() > 0)


def build_covariance(cfg: ScenarioConfig) -> np.ndarray:
    sigma = np.zeros((cfg.p, cfg.p))
    for a, b, rho in cfg.groups:
        sigma[a:b, a:b] = rho
    np.fill_diagonal(sigma, 1.0)
    if not _is_pd(sigma):
        sigma = nearest_pd(sigma)
        if np.linalg.eigvalsh(sigma).min() < 1e-10:
            raise NotRepairable("covariance still singular after eigenvalue repair")
    return sigma


def generate_dataset(cfg: ScenarioConfig, replicate: int, sigma=None):
    """``(X, Y, truth)`` for one replicate; rows of X are i.i.d. N(0, Sigma)."""
    if sigma is None:
        sigma = build_covariance(cfg)
    L = np.linalg.cholesky(sigma)
    rng = substream(cfg.seed, "data", replicate)
    X = rng.standard_normal((cfg.n, cfg.p)) @ L.T
    Y = X @ cfg.beta_full() + cfg.noise_sd * rng.standard_normal(cfg.n)
    return X, Y, frozenset(cfg.active_indices())


def f1_score(selected, truth) -> float:
    selected, truth = set(selected), set(truth)
    if not truth:
        raise UndefinedTruth("F1 needs a non-empty true support")
    tp = len(selected & truth)
    if tp == 0:
        return 0.0
    precision = tp / len(selected)
    recall = tp / len(truth)
    return 2 * precision * recall / (precision + recall)


@dataclass
class ReplicateRecord:
    replicate: int
    pipeline: str
    lam: float
    rule: str
    phi: float
    phi_sd: float
    q: float
    f1: tuple
    frequencies: np.ndarray = field(repr=False)
    design_frequencies: np.ndarray = field(repr=False)
    ordering: np.ndarray = field(repr=False)


@dataclass
class EvalReport:
    scenario: str
    pipeline: str
    pi_grid: tuple
    records: list
    failures: list  # (replicate, message)

    @property
    def phis(self) -> np.ndarray:
        return np.array([r.phi for r in self.records])

    def mean_phi(self) -> float:
        return float(np.nanmean(self.phis)) if self.records else float("nan")

    def mean_f1(self) -> np.ndarray:
        if not self.records:
            return np.full(len(self.pi_grid), np.nan)
        return np.mean([r.f1 for r in self.records], axis=0)

    def sd_f1(self) -> np.ndarray:
        if not self.records:
            return np.full(len(self.pi_grid), np.nan)
        return np.std([r.f1 for r in self.records], axis=0, ddof=1) if len(self.records) > 1 else np.zeros(len(self.pi_grid))


def _run_replicate(cfg, replicate, pipelines, sigma, options):
    X, Y, truth = generate_dataset(cfg, replicate, sigma)
    d = standardize(X, Y)
    plan = subsample_plan(d.n, cfg.B, substream(cfg.seed, "plan", replicate))
    out = {}
    for name in pipelines:
        try:
            res = select(d, name, plan=plan, **options)
        except DecorrError as exc:
            out[name] = (replicate, f"{type(exc).__name__}: {exc}")
            continue
        lam = res.tuning.lambda_stable_1sd
        g = res.lambda_index(lam)
        full = res.full_matrix(lam)
        f1 = []
        for thr in PI_GRID:
            chosen = np.flatnonzero(full.entries.mean(axis=0) >= thr)
            f1.append(f1_score(chosen, truth))
        out[name] = ReplicateRecord(
            replicate, name, lam, "stable_1sd",
            float(res.profile.phi[g]), float(res.profile.phi_sd[g]), float(res.profile.q[g]),
            tuple(f1), res.frequencies(lam), res.design_frequencies(lam), res.design.ordering,
        )
    return out


def run_experiments(
    cfg: ScenarioConfig,
    pipelines: Sequence[str] = ("raw", "decorrelated"),
    jobs: int = 1,
    **options,
) -> dict[str, EvalReport]:
    """Run several pipeline variants on the same replicate datasets.

    Each replicate shares data and subsample plan across variants, and every
    variant is tuned with the stable-1sd rule. ``options`` go to
    :func:`decorr.pipeline.select` (grid_count, threshold, gs_mode, ...).
    A replicate that errors is recorded as a failure; more than 20 % failures
    in any variant aborts with :class:`ExperimentFailed`.
    """
    for name in pipelines:
        if name not in PIPELINES:
            raise ValueError(f"unknown pipeline {name!r}")
    sigma = build_covariance(cfg)
    task = partial(_run_replicate, cfg, pipelines=tuple(pipelines), sigma=sigma, options=options)
    reps = range(cfg.dataset_count)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(task, reps))
    else:
        results = [task(r) for r in reps]
    reports = {}
    for name in pipelines:
        records, failures = [], []
        for res in results:
            item = res[name]
            (records if isinstance(item, ReplicateRecord) else failures).append(item)
        if len(failures) > MAX_FAILURE_FRACTION * cfg.dataset_count:
            raise ExperimentFailed(
                f"{name}: {len(failures)} of {cfg.dataset_count} replicates failed; first: {failures[0][1]}"
            )
        for rep, msg in failures:
            log.warning("%s replicate %d failed: %s", name, rep, msg)
        reports[name] = EvalReport(cfg.name, name, PI_GRID, records, failures)
    return reports


def run_experiment(cfg: ScenarioConfig, pipeline: str = "decorrelated", jobs: int = 1, **options) -> EvalReport:
    return run_experiments(cfg, (pipeline,), jobs=jobs, **options)[pipeline]


def load_scenario(spec: str, desk: bool = False) -> ScenarioConfig:
    """Resolve a preset name or a path to a scenario JSON file."""
    if spec in PRESETS:
        return preset(spec, desk=desk)
    path = Path(spec)
    if path.suffix.lower() == ".json" or path.exists():
        with path.open(encoding="utf-8") as fh:
            return ScenarioConfig.from_json(json.load(fh))
    raise KeyError(spec)


def with_overrides(cfg: ScenarioConfig, **kw) -> ScenarioConfig:
    kw = {k: v for k, v in kw.items() if v is not None}
    return replace(cfg, **kw) if kw else cfg
