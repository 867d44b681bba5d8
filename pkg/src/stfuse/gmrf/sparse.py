"""对称稀疏矩阵容器：只存下三角（CSC），按需分解并缓存分解结果。"""

from __future__ import annotations

import logging
from typing import Optional, Tuple

import numpy as np
import scipy.sparse as sp

from stfuse.exceptions import ConfigError

logger = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-10


class SparseSym:
    """Symmetric matrix stored as its lower triangle in compressed-column layout.

    The factorization is computed on first use and kept on the instance, so a
    ``SparseSym`` should be treated as immutable once built.
    """

    def __init__(self, lower: sp.csc_matrix, kron: Optional[Tuple["SparseSym", "SparseSym"]] = None):
        if lower.shape[0] != lower.shape[1]:
            raise ConfigError(f"matrix must be square, got shape {lower.shape}")
        lower = sp.csc_matrix(lower)
        lower.sort_indices()
        self._lower = lower
        self._kron = kron
        self._factor = None

    @classmethod
    def from_matrix(cls, matrix, check: bool = True) -> "SparseSym":
        """从完整对称矩阵（稀疏或稠密）构造；``check`` 时检查对称性。"""
        M = sp.csc_matrix(matrix)
        if check:
            asym = abs(M - M.T)
            scale = max(abs(M).max(), 1.0) if M.nnz else 1.0
            if asym.nnz and asym.max() > SYMMETRY_TOL * scale:
                raise ConfigError("matrix is not symmetric")
        return cls(sp.tril(M, format="csc"))

    @property
    def dim(self) -> int:
        return int(self._lower.shape[0])

    @property
    def shape(self) -> Tuple[int, int]:
        return self._lower.shape

    @property
    def lower(self) -> sp.csc_matrix:
        return self._lower

    @property
    def kron_factors(self) -> Optional[Tuple["SparseSym", "SparseSym"]]:
        """(Q_T, Q_S) when the matrix was built as a Kronecker product."""
        return self._kron

    @property
    def nnz(self) -> int:
        """完整矩阵的非零元个数。"""
        diag = int(np.count_nonzero(self._lower.indices == np.repeat(np.arange(self.dim), np.diff(self._lower.indptr))))
        return 2 * self._lower.nnz - diag

    def full(self) -> sp.csr_matrix:
        L = self._lower
        strict = sp.tril(L, k=-1, format="csc")
        return sp.csr_matrix(L + strict.T)

    def toarray(self) -> np.ndarray:
        return self.full().toarray()

    def diagonal(self) -> np.ndarray:
        return self._lower.diagonal()

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.full() @ x

    def __matmul__(self, x):
        return self.matvec(x)

    def factor(self):
        """Cholesky 分解（带缓存）。"""
        if self._factor is None:
            from stfuse.gmrf.cholesky import factorize

            self._factor = factorize(self)
        return self._factor

    @property
    def is_factorized(self) -> bool:
        return self._factor is not None

    def solve(self, b: np.ndarray) -> np.ndarray:
        return self.factor().solve(b)

    def logdet(self) -> float:
        if self._kron is not None and self._factor is None:
            Q_T, Q_S = self._kron
            return Q_S.dim * Q_T.logdet() + Q_T.dim * Q_S.logdet()
        return self.factor().logdet

    def __repr__(self) -> str:
        state = "factorized" if self.is_factorized else "unfactorized"
        return f"SparseSym(dim={self.dim}, nnz={self.nnz}, {state})"
