"""时间 AR(1) 精度矩阵与时空 Kronecker 精度矩阵。"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from stfuse.exceptions import ConfigError
from stfuse.gmrf.sparse import SparseSym


def precision_ar1(rho: float, T: int) -> SparseSym:
    """单位新息、平稳初值的 AR(1) 精度矩阵。

    三对角：对角 (1, 1+ρ², …, 1+ρ², 1)，次对角 -ρ；T = 1 时为 [[1]]。
    ρ = 0 时次对角的零元保留在稀疏结构里，使不同 ρ 的矩阵模式一致。
    """
    if not abs(rho) < 1.0:
        raise ConfigError(f"|rho| must be < 1, got {rho}")
    if T < 1:
        raise ConfigError(f"T must be >= 1, got {T}")
    diag = np.full(T, 1.0 + rho * rho)
    diag[0] = 1.0
    diag[-1] = 1.0
    # 下三角 CSC：第 t 列依次是 (t, t) 和 (t+1, t)
    indptr = np.zeros(T + 1, dtype=np.int64)
    indptr[1:] = np.minimum(np.arange(1, T + 1) * 2, 2 * T - 1)
    indices = np.empty(2 * T - 1, dtype=np.int64)
    data = np.empty(2 * T - 1)
    indices[0::2] = np.arange(T)
    data[0::2] = diag
    indices[1::2] = np.arange(1, T)
    data[1::2] = -rho
    return SparseSym(sp.csc_matrix((data, indices, indptr), shape=(T, T)))


def kron_precision(Q_T: SparseSym, Q_S: SparseSym) -> SparseSym:
    """Q = Q_T ⊗ Q_S，潜变量按时间优先排列 (ξ_1, …, ξ_T)。

    结果记住两个因子，log 行列式用 G·log|Q_T| + T·log|Q_S| 计算而不必分解整个矩阵。
    """
    lower = sp.kron(Q_T.full(), Q_S.full(), format="csc")
    return SparseSym(sp.tril(lower, format="csc"), kron=(Q_T, Q_S))
