"""Bagged GLM ensembles compressed by BIC-scored clustering in significance space."""

__version__ = "0.1.0"

from .data import Dataset, FoldPlan, Standardizer, load_csv, make_folds, standardize
from .glm import (
    GlmFit,
    SelectionConfig,
    fit_binomial,
    fit_gaussian,
    information_criterion,
    stepwise_select,
)
from .ensemble import (
    BagConfig,
    Ensemble,
    build_coefficient_matrix,
    build_significance_matrix,
    fit_ensemble,
)
from .compression import (
    CompressedEnsemble,
    CostProfile,
    Dendrogram,
    Membership,
    compress,
    cost_at_k,
    memberships_at,
    select_k,
    term_model_bic,
    ward_cluster,
)
from .evaluate import EvalReport, auc, cross_validate, evaluate_datasets, paired_t_test, predict

__all__ = [
    "BagConfig",
    "CompressedEnsemble",
    "CostProfile",
    "Dataset",
    "Dendrogram",
    "Ensemble",
    "EvalReport",
    "FoldPlan",
    "GlmFit",
    "Membership",
    "SelectionConfig",
    "Standardizer",
    "auc",
    "build_coefficient_matrix",
    "build_significance_matrix",
    "compress",
    "cost_at_k",
    "cross_validate",
    "evaluate_datasets",
    "fit_binomial",
    "fit_ensemble",
    "fit_gaussian",
    "information_criterion",
    "load_csv",
    "make_folds",
    "memberships_at",
    "paired_t_test",
    "predict",
    "select_k",
    "standardize",
    "stepwise_select",
    "term_model_bic",
    "ward_cluster",
]
