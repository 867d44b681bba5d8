"""预测：每个目标在各网格点上的高斯预测分布按权重混合。

目标分两类：
- ``latent``：潜在过程 y(s, t) = x(s)ᵀβ + ξ_t(s)，不含观测噪声；
- ``observation``：观测值。卫星像元额外包含偏差 a（融合模型）和噪声 1/τ1，
  原位点额外包含噪声 1/τ2；模型没有对应的精度时用另一个。
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import scipy.sparse as sp

from stfuse.exceptions import ConfigError
from stfuse.fusion.system import FusionModel
from stfuse.geometry.projection import block_projection, point_projection, spacetime_blockdiag
from stfuse.inference.fit import FitResult
from stfuse.inference.summary import mixture_summary

logger = logging.getLogger(__name__)

LATENT = "latent"
OBSERVATION = "observation"


@dataclass(eq=False)
class TargetSet:
    """预测目标：点目标给坐标，block 目标给 block id；每行一个 (目标, t)。"""

    kind: np.ndarray  # "point" / "block"
    source_id: np.ndarray
    xy: np.ndarray
    t: np.ndarray
    quantity: np.ndarray  # LATENT / OBSERVATION
    extra: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        self.kind = np.asarray(self.kind, dtype=object)
        self.source_id = np.asarray(self.source_id, dtype=np.int64)
        self.xy = np.asarray(self.xy, dtype=float).reshape(-1, 2)
        self.t = np.asarray(self.t, dtype=np.int64)
        self.quantity = np.asarray(self.quantity, dtype=object)
        n = len(self.t)
        if not (len(self.kind) == len(self.source_id) == len(self.xy) == len(self.quantity) == n):
            raise ConfigError("target columns have different lengths")
        if self.extra is not None:
            self.extra = np.asarray(self.extra, dtype=float).reshape(n, -1)

    def __len__(self) -> int:
        return int(len(self.t))

    @classmethod
    def points(cls, xy, days, site_ids=None, quantity: str = LATENT) -> "TargetSet":
        """每个点在每个给定天上各一行（按天优先排列）。"""
        xy = np.asarray(xy, dtype=float).reshape(-1, 2)
        days = np.asarray(list(days), dtype=np.int64)
        ids = np.arange(len(xy)) if site_ids is None else np.asarray(site_ids, dtype=np.int64)
        n = len(xy)
        return cls(
            kind=np.full(n * len(days), "point", dtype=object),
            source_id=np.tile(ids, len(days)),
            xy=np.tile(xy, (len(days), 1)),
            t=np.repeat(days, n),
            quantity=np.full(n * len(days), quantity, dtype=object),
        )

    @classmethod
    def blocks(cls, block_ids, t, centroids, quantity: str = OBSERVATION) -> "TargetSet":
        block_ids = np.asarray(block_ids, dtype=np.int64)
        n = len(block_ids)
        return cls(
            kind=np.full(n, "block", dtype=object),
            source_id=block_ids,
            xy=np.asarray(centroids, dtype=float).reshape(n, 2),
            t=np.asarray(t, dtype=np.int64),
            quantity=np.full(n, quantity, dtype=object),
        )

    def concat(self, other: "TargetSet") -> "TargetSet":
        extra = None
        if self.extra is not None or other.extra is not None:
            extra = np.vstack([_extra_or_zeros(self), _extra_or_zeros(other)])
        return TargetSet(
            kind=np.concatenate([self.kind, other.kind]),
            source_id=np.concatenate([self.source_id, other.source_id]),
            xy=np.vstack([self.xy, other.xy]),
            t=np.concatenate([self.t, other.t]),
            quantity=np.concatenate([self.quantity, other.quantity]),
            extra=extra,
        )


def _extra_or_zeros(targets: TargetSet) -> np.ndarray:
    return targets.extra if targets.extra is not None else np.zeros((len(targets), 0))


@dataclass(eq=False)
class Predictions:
    targets: TargetSet
    mean: np.ndarray
    sd: np.ndarray
    q025: np.ndarray
    q975: np.ndarray
    component_means: List[np.ndarray] = field(default_factory=list, repr=False)

    def __len__(self) -> int:
        return len(self.targets)


def missing_cell_targets(
    model: FusionModel, last_day: Optional[int] = None, observed_only: bool = False
) -> TargetSet:
    """训练期内每个缺失的卫星像元-天。

    ``observed_only`` 时只考虑至少有一天观测的像元（整张网格中从未观测的像元多半在区域外）。
    """
    blocks = model.blocks
    if blocks is None:
        raise ConfigError("the model has no satellite blocks")
    if observed_only:
        seen = set(model.obs.sat_block.tolist())
        blocks = blocks.subset([k for k, b in enumerate(blocks.ids.tolist()) if b in seen])
    last = model.obs.last_observed_day() if last_day is None else last_day
    ids, ts = model.obs.missing_cells(blocks, last)
    cent = blocks.centroids()
    pos = np.array([blocks.position(b) for b in ids], dtype=np.int64)
    return TargetSet.blocks(ids, ts, cent[pos] if len(pos) else np.zeros((0, 2)))


def design_rows(model: FusionModel, targets: TargetSet) -> sp.csr_matrix:
    """目标对应的潜变量线性组合 B（每行作用在 u = (ξ, β, a) 上）。"""
    T, n = model.T, len(targets)
    if n == 0:
        return sp.csr_matrix((0, model.H.shape[1]))
    if targets.t.min() < 1 or targets.t.max() > T:
        raise ConfigError(f"target days must lie in [1, {T}]")

    field_parts, order = [], []
    is_block = targets.kind == "block"
    if np.any(~is_block):
        idx = np.flatnonzero(~is_block)
        A = point_projection(model.mesh, targets.xy[idx])
        st = spacetime_blockdiag(A, T, np.column_stack([targets.t[idx], np.arange(len(idx))]))
        field_parts.append(st.matrix)
        order.append(idx)
    if np.any(is_block):
        if model.blocks is None:
            raise ConfigError("block targets need the model's BlockSet")
        idx = np.flatnonzero(is_block)
        A = block_projection(model.mesh, model.blocks)
        pos = np.array([model.blocks.position(b) for b in targets.source_id[idx]], dtype=np.int64)
        # 同一 (block, t) 可以出现多次（潜在值和观测值各一行）
        pairs, inverse = np.unique(np.column_stack([targets.t[idx], pos]), axis=0, return_inverse=True)
        st = spacetime_blockdiag(A, T, pairs)
        field_parts.append(st.matrix[inverse.ravel()])
        order.append(idx)
    stacked = sp.vstack(field_parts, format="csr")
    field_rows = stacked[np.argsort(np.concatenate(order), kind="stable")]

    n_extra = len(model.obs.extra_names)
    extra = _extra_or_zeros(targets)
    if extra.shape[1] != n_extra:
        if extra.shape[1] == 0 and n_extra:
            raise ConfigError(f"targets need values for covariates {model.obs.extra_names}")
        raise ConfigError(f"targets carry {extra.shape[1]} extra covariates, the model has {n_extra}")
    X = np.hstack([model.obs.spatial_covariates(targets.xy), extra])
    parts = [field_rows, sp.csr_matrix(X)]
    if "a" in model.fixed_names:
        bias = ((targets.quantity == OBSERVATION) & (targets.kind == "block")).astype(float)[:, None]
        parts.append(sp.csr_matrix(bias))
    return sp.hstack(parts, format="csr")


def predict(fit: FitResult, targets: TargetSet) -> Predictions:
    """每个目标的混合预测分布：均值、标准差和 2.5% / 97.5% 分位数。

    Raises:
        GeometryError: 目标点在网格外
    """
    model = fit.model
    B = design_rows(model, targets)
    obs_rows = targets.quantity == OBSERVATION
    sat_rows = obs_rows & (targets.kind == "block")
    ins_rows = obs_rows & ~sat_rows
    w = fit.weights
    means, variances = [], []
    for p in fit.points:
        mu = np.asarray(B @ p.conditional.mean).ravel()
        var = p.conditional.linear_variance(B) if len(targets) else np.zeros(0)
        if np.any(obs_rows):
            th = p.theta
            tau_sat = th.tau1 if th.tau1 is not None else th.tau2
            tau_ins = th.tau2 if th.tau2 is not None else th.tau1
            var = var + sat_rows / tau_sat + ins_rows / tau_ins
        means.append(mu)
        variances.append(var)
    means_arr = np.array(means).reshape(len(fit.points), len(targets))
    vars_arr = np.array(variances).reshape(len(fit.points), len(targets))

    out = np.empty((len(targets), 4))
    for i in range(len(targets)):
        s = mixture_summary(w, means_arr[:, i], vars_arr[:, i])
        out[i] = (s.mean, s.sd, s.q025, s.q975)
    logger.info("predicted %d target(s) over %d grid point(s)", len(targets), len(fit.points))
    return Predictions(
        targets=targets,
        mean=out[:, 0],
        sd=out[:, 1],
        q025=out[:, 2],
        q975=out[:, 3],
        component_means=means,
    )
