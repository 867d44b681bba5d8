"""把观测组装成潜变量 u = (ξ_1..ξ_T, β, a) 上的线性高斯系统。

行顺序：先卫星行，后原位行。a 列只在融合模型中出现，卫星行为 1、原位行为 0。
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import scipy.sparse as sp

from stfuse.exceptions import ConfigError
from stfuse.fusion.hyperparams import Hyperparams
from stfuse.fusion.observations import ObservationSet
from stfuse.geometry.blocks import BlockSet
from stfuse.geometry.mesh import Mesh
from stfuse.geometry.projection import block_projection, point_projection, spacetime_blockdiag
from stfuse.gmrf.precision import kron_precision, precision_ar1
from stfuse.gmrf.sparse import SparseSym
from stfuse.spde.fem import FemMatrices, fem_matrices
from stfuse.spde.matern import precision_spatial

logger = logging.getLogger(__name__)

KINDS = ("fusion", "insitu", "satellite")
SATELLITE_ROW = 0
INSITU_ROW = 1
DEFAULT_FIXED_SD = 100.0


@dataclass(eq=False)
class LinearGaussianSystem:
    """z = H u + e，e ~ N(0, diag(noise_prec)⁻¹)，u ~ N(0, prior⁻¹)。"""

    kind: str
    z: np.ndarray
    H: sp.csr_matrix
    noise_prec: np.ndarray
    field_prior: SparseSym
    fixed_prec: np.ndarray
    G: int
    T: int
    fixed_names: List[str]
    row_group: np.ndarray
    theta: Optional[Hyperparams] = None
    _prior: Optional[SparseSym] = field(default=None, repr=False)

    @property
    def n_rows(self) -> int:
        return int(self.H.shape[0])

    @property
    def n_field(self) -> int:
        return self.G * self.T

    @property
    def n_latent(self) -> int:
        return int(self.H.shape[1])

    @property
    def has_bias(self) -> bool:
        return "a" in self.fixed_names

    @property
    def prior(self) -> SparseSym:
        """完整潜变量先验精度 blockdiag(Q_T ⊗ Q_S, diag(fixed_prec))。"""
        if self._prior is None:
            full = sp.block_diag([self.field_prior.full(), sp.diags(self.fixed_prec)], format="csc")
            self._prior = SparseSym(sp.tril(full, format="csc"))
        return self._prior

    def prior_logdet(self) -> float:
        return self.field_prior.logdet() + float(np.sum(np.log(self.fixed_prec)))

    def fixed_index(self, name: str) -> int:
        return self.n_field + self.fixed_names.index(name)


class FusionModel:
    """与超参数无关的结构部分：投影矩阵、设计矩阵、观测向量和 FEM 矩阵。

    ``system(theta)`` 只重建依赖 Θ 的先验和噪声精度。
    """

    def __init__(
        self,
        kind: str,
        obs: ObservationSet,
        mesh: Mesh,
        blocks: Optional[BlockSet] = None,
        fem: Optional[FemMatrices] = None,
        fixed_effect_sd: float = DEFAULT_FIXED_SD,
    ):
        if kind not in KINDS:
            raise ConfigError(f"unknown model kind {kind!r}; expected one of {KINDS}")
        use_sat = kind in ("fusion", "satellite")
        use_ins = kind in ("fusion", "insitu")
        n_sat = obs.n_satellite if use_sat else 0
        n_ins = obs.n_insitu if use_ins else 0
        if n_sat + n_ins == 0:
            raise ConfigError(f"no observations available for model kind {kind!r}")
        if n_sat and blocks is None:
            raise ConfigError("satellite rows need a BlockSet")
        if not fixed_effect_sd > 0:
            raise ConfigError("fixed_effect_sd must be positive")

        self.kind = kind
        self.obs = obs
        self.mesh = mesh
        self.blocks = blocks
        self.fem = fem if fem is not None else fem_matrices(mesh)
        self.T = obs.T
        self.G = mesh.n_vertices
        self.fixed_effect_sd = float(fixed_effect_sd)

        parts_A, parts_X, z, groups = [], [], [], []
        if n_sat:
            A_blk = block_projection(mesh, blocks)
            pos = np.array([blocks.position(b) for b in obs.sat_block], dtype=np.int64)
            st = spacetime_blockdiag(A_blk, self.T, np.column_stack([obs.sat_t, pos]))
            parts_A.append(st.matrix)
            parts_X.append(obs.satellite_covariates(blocks))
            z.append(obs.sat_value)
            groups.append(np.full(n_sat, SATELLITE_ROW))
        if n_ins:
            A_pt = point_projection(mesh, obs.insitu_xy)
            st = spacetime_blockdiag(A_pt, self.T, np.column_stack([obs.insitu_t, np.arange(n_ins)]))
            parts_A.append(st.matrix)
            parts_X.append(obs.insitu_covariates())
            z.append(obs.insitu_value)
            groups.append(np.full(n_ins, INSITU_ROW))

        self.row_group = np.concatenate(groups)
        self.z = np.concatenate(z)
        A = sp.vstack(parts_A, format="csr")
        X = np.vstack(parts_X)
        self.fixed_names = [f"beta{i}" for i in range(obs.n_covariates)]
        blocks_H = [A, sp.csr_matrix(X)]
        if kind == "fusion":
            bias = (self.row_group == SATELLITE_ROW).astype(float)[:, None]
            blocks_H.append(sp.csr_matrix(bias))
            self.fixed_names.append("a")
        self.H = sp.hstack(blocks_H, format="csr")
        self.covariate_names = obs.covariate_names
        logger.debug(
            "%s system: %d rows (%d satellite, %d in situ), %d latent", kind, len(self.z), n_sat, n_ins, self.H.shape[1]
        )

    @property
    def n_satellite_rows(self) -> int:
        return int(np.sum(self.row_group == SATELLITE_ROW))

    @property
    def n_insitu_rows(self) -> int:
        return int(np.sum(self.row_group == INSITU_ROW))

    def noise_precision(self, theta: Hyperparams) -> np.ndarray:
        prec = np.empty(len(self.z))
        sat = self.row_group == SATELLITE_ROW
        if sat.any():
            if theta.tau1 is None:
                raise ConfigError("tau1 is required when satellite rows are present")
            prec[sat] = theta.tau1
        if (~sat).any():
            if theta.tau2 is None:
                raise ConfigError("tau2 is required when in situ rows are present")
            prec[~sat] = theta.tau2
        return prec

    def field_prior(self, theta: Hyperparams) -> SparseSym:
        Q_S = precision_spatial(self.fem, theta.kappa, theta.tau_omega)
        Q_T = precision_ar1(theta.rho, self.T)
        return kron_precision(Q_T, Q_S)

    def system(self, theta: Hyperparams) -> LinearGaussianSystem:
        n_fixed = len(self.fixed_names)
        return LinearGaussianSystem(
            kind=self.kind,
            z=self.z,
            H=self.H,
            noise_prec=self.noise_precision(theta),
            field_prior=self.field_prior(theta),
            fixed_prec=np.full(n_fixed, 1.0 / self.fixed_effect_sd**2),
            G=self.G,
            T=self.T,
            fixed_names=list(self.fixed_names),
            row_group=self.row_group,
            theta=theta,
        )


def assemble(
    kind: str,
    obs: ObservationSet,
    mesh: Mesh,
    blocks: Optional[BlockSet],
    theta: Hyperparams,
    fixed_effect_sd: float = DEFAULT_FIXED_SD,
) -> LinearGaussianSystem:
    """构造 ``kind`` 模型在 Θ 处的线性高斯系统。"""
    return FusionModel(kind, obs, mesh, blocks, fixed_effect_sd=fixed_effect_sd).system(theta)
