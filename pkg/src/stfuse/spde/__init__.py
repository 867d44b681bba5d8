"""
SPDE 模块

有限元矩阵、Matérn 协方差与空间精度矩阵。
"""

from .bessel import k0, k0_k1, k1
from .fem import FemMatrices, fem_matrices
from .matern import (
    SpdeParams,
    convert_params,
    marginal_variance,
    matern_cov,
    practical_range,
    precision_spatial,
)

__all__ = [
    "FemMatrices",
    "SpdeParams",
    "convert_params",
    "fem_matrices",
    "k0",
    "k0_k1",
    "k1",
    "marginal_variance",
    "matern_cov",
    "practical_range",
    "precision_spatial",
]
