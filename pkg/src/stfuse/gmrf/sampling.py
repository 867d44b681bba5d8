"""高斯条件分布与 GMRF 抽样。"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from stfuse.exceptions import ConfigError
from stfuse.gmrf.sparse import SparseSym


@dataclass(eq=False)
class GaussianConditional:
    """N(mean, precision⁻¹)."""

    mean: np.ndarray
    precision: SparseSym

    def __post_init__(self) -> None:
        self.mean = np.asarray(self.mean, dtype=float)
        if self.mean.shape != (self.precision.dim,):
            raise ConfigError(f"mean has shape {self.mean.shape}, precision has dimension {self.precision.dim}")

    @property
    def dim(self) -> int:
        return self.precision.dim

    def log_density(self, x: np.ndarray) -> float:
        """log N(x; mean, precision⁻¹)。"""
        r = np.asarray(x, dtype=float) - self.mean
        quad = float(r @ self.precision.matvec(r))
        return 0.5 * (self.precision.logdet() - self.dim * np.log(2.0 * np.pi) - quad)

    def linear_mean(self, B) -> np.ndarray:
        return np.asarray(B @ self.mean).ravel()

    def linear_variance(self, B) -> np.ndarray:
        """B x 各分量的方差 diag(B Q⁻¹ Bᵀ)。"""
        return self.precision.factor().row_variances(sp.csr_matrix(B))

    def sample(self, n: int, seed=None) -> np.ndarray:
        return sample_gmrf(self, n, seed)


def sample_gmrf(cond: GaussianConditional, n: int, seed=None, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """抽取 n 个独立样本，返回 (n, dim) 矩阵；给定 seed 结果确定。"""
    if n < 0:
        raise ConfigError(f"sample count must be non-negative, got {n}")
    rng = rng if rng is not None else np.random.default_rng(seed)
    z = rng.standard_normal((cond.dim, n))
    if n == 0:
        return np.zeros((0, cond.dim))
    x = cond.precision.factor().sample(z)
    return (x + cond.mean[:, None]).T
