"""超参数先验，全部在变换尺度上求值。"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from stfuse.fusion.hyperparams import TIED
from stfuse.model import PriorSpec

_LOG_2PI = math.log(2.0 * math.pi)


def normal_logpdf(x: float, mean: float, var: float) -> float:
    return -0.5 * (_LOG_2PI + math.log(var) + (x - mean) ** 2 / var)


def log_gamma_logpdf(eta: float, shape: float, rate: float) -> float:
    """τ ~ Gamma(shape, rate) 时 η = log τ 的对数密度。"""
    return shape * math.log(rate) - float(gammaln(shape)) + shape * eta - rate * math.exp(eta)


def log_prior(names: Sequence[str], x: np.ndarray, priors: PriorSpec) -> float:
    """变换尺度向量 ``x`` 的对数先验密度（各分量独立）。"""
    total = 0.0
    for name, v in zip(names, np.asarray(x, dtype=float)):
        if name in ("tau_omega", "kappa"):
            total += normal_logpdf(v, priors.theta_mean, priors.theta_sd**2)
        elif name == "rho":
            total += normal_logpdf(v, 0.0, priors.rho_transform_var)
        elif name in ("tau1", "tau2", TIED):
            total += log_gamma_logpdf(v, priors.log_tau_shape, priors.log_tau_rate)
        else:
            raise KeyError(f"no prior for hyperparameter {name!r}")
    return total
