"""Bias-reduced estimation of the largest of several group means."""

from __future__ import annotations

__version__ = "0.1.0"

from .model import (
    BudgetError,
    Dataset,
    Estimate,
    EstimatorSpec,
    GroupObservations,
    GroupSummary,
    PreconditionError,
    SelbiasError,
    Trace,
    ValidationError,
    validate,
)
from .estimators import (
    hybrid_estimate,
    jackknife_estimate,
    shrinkage_coefficient,
    shrinkage_estimate,
    traditional_max,
)
from .bootstrap import corrected_estimate, resample
from .methods import estimate, estimate_many
from .oracle import EnumerationBudget, exact_nb_bias
from .evaluation import EvalConfig, evaluate, reproduce_table

__all__ = [
    "BudgetError", "Dataset", "Estimate", "EstimatorSpec", "GroupObservations", "GroupSummary",
    "PreconditionError", "SelbiasError", "Trace", "ValidationError", "validate",
    "hybrid_estimate", "jackknife_estimate", "shrinkage_coefficient", "shrinkage_estimate",
    "traditional_max", "corrected_estimate", "resample", "estimate", "estimate_many",
    "EnumerationBudget", "exact_nb_bias", "EvalConfig", "evaluate", "reproduce_table",
]
