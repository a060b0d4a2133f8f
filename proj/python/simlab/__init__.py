"""Sparse linear discriminant rules for imbalanced two-class data.

Labels are 1 and 2; class 2 is the minority class. A rule assigns class 1
when ``w @ x + b < 0``.
"""

from ._simlab import (
    GaussianModel,
    LinearRule,
    SimlabError,
    ValidationError,
    bayes_rule,
    empirical_mcr,
    fit,
    fit_hr,
    fit_lda,
    fit_msplit_hr_diag,
    fit_msplit_hr_general,
    make_setting,
    model_from_json,
    model_to_json,
    normal_cdf,
    run_experiment,
    theoretical_mcr,
)

__all__ = [
    "GaussianModel",
    "LinearRule",
    "SimlabError",
    "ValidationError",
    "bayes_rule",
    "empirical_mcr",
    "fit",
    "fit_hr",
    "fit_lda",
    "fit_msplit_hr_diag",
    "fit_msplit_hr_general",
    "make_setting",
    "model_from_json",
    "model_to_json",
    "normal_cdf",
    "run_experiment",
    "theoretical_mcr",
]
