"""给定 Θ 时潜变量的精确高斯边缘化。

log p(z | Θ) = log p(u | Θ) + log p(z | u, Θ) - log p(u | z, Θ)，对任意 u 成立；
默认在后验均值处求值。
"""

from __future__ import annotations

import math
from typing import Optional, Union

import numpy as np
import scipy.sparse as sp

from stfuse.exceptions import ConfigError
from stfuse.fusion.hyperparams import Hyperparams
from stfuse.fusion.system import FusionModel, LinearGaussianSystem
from stfuse.gmrf.sampling import GaussianConditional
from stfuse.gmrf.sparse import SparseSym

_LOG_2PI = math.log(2.0 * math.pi)


def gaussian_posterior(prior: SparseSym, H, noise_prec, z) -> GaussianConditional:
    """u | z 的精度 Q + Hᵀ Γ H 和均值 (Q + Hᵀ Γ H)⁻¹ Hᵀ Γ z。"""
    H = sp.csr_matrix(H)
    noise_prec = np.asarray(noise_prec, dtype=float)
    z = np.asarray(z, dtype=float)
    if H.shape[0] == 0:
        return GaussianConditional(np.zeros(prior.dim), prior)
    HtG = H.T.multiply(noise_prec[None, :]).tocsr()
    post = SparseSym.from_matrix(prior.full() + HtG @ H, check=False)
    mean = post.solve(HtG @ z)
    return GaussianConditional(mean, post)


def gaussian_log_evidence(
    prior: SparseSym,
    H,
    noise_prec,
    z,
    at: Optional[np.ndarray] = None,
    prior_logdet: Optional[float] = None,
    posterior: Optional[GaussianConditional] = None,
) -> float:
    """log N(z; 0, H Q⁻¹ Hᵀ + Γ⁻¹)，通过在点 ``at`` 处的三项恒等式计算。"""
    H = sp.csr_matrix(H)
    noise_prec = np.asarray(noise_prec, dtype=float)
    z = np.asarray(z, dtype=float)
    cond = posterior if posterior is not None else gaussian_posterior(prior, H, noise_prec, z)
    u = cond.mean if at is None else np.asarray(at, dtype=float)
    ld_prior = prior.logdet() if prior_logdet is None else prior_logdet

    # 三项中的 -n/2 log 2π 互相抵消
    log_prior_u = 0.5 * ld_prior - 0.5 * float(u @ prior.matvec(u))
    r = z - H @ u
    log_lik = 0.5 * float(np.sum(np.log(noise_prec))) - 0.5 * len(z) * _LOG_2PI - 0.5 * float(np.sum(noise_prec * r * r))
    d = u - cond.mean
    log_post_u = 0.5 * cond.precision.logdet() - 0.5 * float(d @ cond.precision.matvec(d))
    return log_prior_u + log_lik - log_post_u


def _system(source: Union[LinearGaussianSystem, FusionModel], theta: Optional[Hyperparams]) -> LinearGaussianSystem:
    if isinstance(source, FusionModel):
        if theta is None:
            raise ConfigError("theta is required when a FusionModel is given")
        return source.system(theta)
    return source


def latent_posterior(
    source: Union[LinearGaussianSystem, FusionModel], theta: Optional[Hyperparams] = None
) -> GaussianConditional:
    """u | z, Θ。``source`` 为 FusionModel 时先在 Θ 处组装系统。"""
    system = _system(source, theta)
    return gaussian_posterior(system.prior, system.H, system.noise_prec, system.z)


def log_marginal_likelihood(
    theta: Optional[Hyperparams],
    source: Union[LinearGaussianSystem, FusionModel],
    at: Optional[np.ndarray] = None,
    posterior: Optional[GaussianConditional] = None,
) -> float:
    """log p(z | Θ)。"""
    system = _system(source, theta)
    return gaussian_log_evidence(
        system.prior,
        system.H,
        system.noise_prec,
        system.z,
        at=at,
        prior_logdet=system.prior_logdet(),
        posterior=posterior,
    )
