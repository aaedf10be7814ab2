"""Robust clustering by trimmed likelihood with eigenvalue-ratio restrictions."""

from .constraints import ConeConstraint, dykstra_project, halfspace_project, restrict_covariances, sym_eigen
from .density import assign, bayes_factors, discriminants, log_normal_pdf, objective, threshold
from .evaluate import bench_table, match_labels, misclassification
from .model import (
    Assignment,
    ConstraintSpec,
    ContractViolation,
    Dataset,
    FitConfig,
    FitResult,
    InvalidInput,
    Mode,
    ModelParams,
    retained_count,
    validate_params,
)
from .simgen import SimScheme, generate, scheme_params
from .solver import concentration_step, fit, fit_comparator, init_random

__version__ = "0.1.0"
