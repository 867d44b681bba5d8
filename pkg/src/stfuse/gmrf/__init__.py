"""
GMRF 模块

对称稀疏矩阵、Cholesky 分解、AR(1)/Kronecker 精度矩阵与抽样。
"""

from .cholesky import Factor, clear_symbolic_cache, factorize, logdet, solve
from .ordering import fill_reducing_order, minimum_degree
from .precision import kron_precision, precision_ar1
from .sampling import GaussianConditional, sample_gmrf
from .sparse import SparseSym

__all__ = [
    "Factor",
    "GaussianConditional",
    "SparseSym",
    "clear_symbolic_cache",
    "factorize",
    "fill_reducing_order",
    "kron_precision",
    "logdet",
    "minimum_degree",
    "precision_ar1",
    "sample_gmrf",
    "solve",
]
