"""Matérn 协方差、SPDE 参数换算以及空间精度矩阵 Q_S。

只支持 nu = 1（算子阶 alpha = 2，二维）。
"""

from __future__ import annotations

import math

import numpy as np
import scipy.sparse as sp
from pydantic import BaseModel, ConfigDict, model_validator

from stfuse.exceptions import ConfigError
from stfuse.gmrf.sparse import SparseSym
from stfuse.spde.bessel import k1
from stfuse.spde.fem import FemMatrices

NU = 1.0
ALPHA = 2


def _check_nu(nu: float) -> None:
    if nu != NU:
        raise ConfigError(f"only nu = 1 is supported, got nu = {nu}")


class SpdeParams(BaseModel):
    """(κ, τ_ω) 与 (σ²_ω, range) 两种参数化。"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kappa: float
    tau_omega: float
    sigma2_omega: float
    range: float
    nu: float = NU
    alpha: int = ALPHA

    @model_validator(mode="after")
    def _positive(self):
        for name in ("kappa", "tau_omega", "sigma2_omega", "range"):
            if not getattr(self, name) > 0.0:
                raise ConfigError(f"{name} must be positive")
        return self

    @classmethod
    def from_precision(cls, kappa: float, tau_omega: float) -> "SpdeParams":
        return cls(
            kappa=kappa,
            tau_omega=tau_omega,
            sigma2_omega=marginal_variance(kappa, tau_omega),
            range=practical_range(kappa),
        )


def marginal_variance(kappa, tau_omega):
    """σ² = 1 / (4π κ² τ²)，对数组逐元素计算。"""
    return 1.0 / (4.0 * math.pi * np.square(kappa) * np.square(tau_omega))


def practical_range(kappa, nu: float = NU):
    r = math.sqrt(8.0 * nu) / np.asarray(kappa, dtype=float)
    return r if r.ndim else float(r)


def convert_params(kappa: float, sigma2: float, nu: float = NU) -> SpdeParams:
    """由 (κ, σ²) 求 τ_ω = 1 / (κ √(4π σ²)) 和 range = √(8ν) / κ。"""
    _check_nu(nu)
    if not (kappa > 0.0 and sigma2 > 0.0):
        raise ConfigError(f"kappa and sigma2 must be positive (kappa={kappa}, sigma2={sigma2})")
    tau = 1.0 / (kappa * math.sqrt(4.0 * math.pi * sigma2))
    return SpdeParams(kappa=kappa, tau_omega=tau, sigma2_omega=sigma2, range=practical_range(kappa, nu), nu=nu)


def matern_cov(d, kappa: float, sigma2: float, nu: float = NU):
    """σ² (κd) K1(κd)，d = 0 处取极限 σ²。"""
    _check_nu(nu)
    d = np.asarray(d, dtype=float)
    if np.any(d < 0.0):
        raise ConfigError("distances must be non-negative")
    u = kappa * d
    out = np.full(u.shape, float(sigma2))
    pos = u > 0.0
    if np.any(pos):
        # Γ(1) 2^0 = 1
        out[pos] = sigma2 * u[pos] * k1(u[pos])
    return out if out.ndim else float(out)


def precision_spatial(fem: FemMatrices, kappa: float, tau_omega: float) -> SparseSym:
    """Q_S = τ² (κ⁴ C + 2κ² G + G C⁻¹ G)。"""
    if not (kappa > 0.0 and tau_omega > 0.0):
        raise ConfigError(f"kappa and tau_omega must be positive (kappa={kappa}, tau_omega={tau_omega})")
    C = fem.C
    G = fem.G_stiff
    k2 = kappa * kappa
    Q = (tau_omega * tau_omega) * (k2 * k2 * C + 2.0 * k2 * G + G @ fem.C_inv @ G)
    return SparseSym.from_matrix(sp.csc_matrix(Q), check=False)
