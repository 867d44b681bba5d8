"""
推断模块

潜变量的精确高斯边缘化、超参数众数与 CCD 网格、预测与后验抽样。
"""

from .engine import gaussian_log_evidence, gaussian_posterior, latent_posterior, log_marginal_likelihood
from .fit import FitResult, GridPoint, build_fit_result, ccd_design, finite_difference_hessian, fit
from .posterior import PosteriorSamples, sample_posterior
from .predict import LATENT, OBSERVATION, Predictions, TargetSet, design_rows, missing_cell_targets, predict
from .priors import log_gamma_logpdf, log_prior, normal_logpdf
from .summary import ParamSummary, discrete_summary, mixture_quantile, mixture_summary, weighted_quantile

__all__ = [
    "LATENT",
    "OBSERVATION",
    "FitResult",
    "GridPoint",
    "ParamSummary",
    "PosteriorSamples",
    "Predictions",
    "TargetSet",
    "build_fit_result",
    "ccd_design",
    "design_rows",
    "discrete_summary",
    "finite_difference_hessian",
    "fit",
    "gaussian_log_evidence",
    "gaussian_posterior",
    "latent_posterior",
    "log_gamma_logpdf",
    "log_marginal_likelihood",
    "log_prior",
    "missing_cell_targets",
    "mixture_quantile",
    "mixture_summary",
    "normal_logpdf",
    "predict",
    "sample_posterior",
    "weighted_quantile",
]
