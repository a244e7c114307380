"""Stable Lasso variable selection on Gram-Schmidt decorrelated predictors."""

__version__ = "0.1.0"

from .data import CoefficientVector, Dataset, load_csv, permute_columns, standardize, write_csv
from .diagnostics import IrrepReport, condition_number, irrepresentable_norm
from .errors import DecorrError
from .lasso import (
    LassoFit,
    RegularizationGrid,
    coordinate_descent,
    kkt_violation,
    lasso_path,
    make_grid,
    orthonormal_lasso,
)
from .orthonormalize import QRFactors, gram_schmidt, project_rows
from .pipeline import PIPELINES, SelectionResult, build_design, select
from .screening import Ranking, adaptive_rank, ridge_holp_scores
from .simulate import (
    PRESETS,
    EvalReport,
    ScenarioConfig,
    build_covariance,
    f1_score,
    generate_dataset,
    nearest_pd,
    preset,
    run_experiment,
    run_experiments,
)
from .stability import (
    SelectionMatrix,
    StabilityProfile,
    TuningResult,
    convergence_trace,
    run_stability,
    select_variables,
    stability_phi,
    stability_profile,
    subsample_plan,
    tune_lambda,
)
