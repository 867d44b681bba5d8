"""原位（点）与卫星（block）观测集合及其协变量。"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

import numpy as np

from stfuse.exceptions import ConfigError
from stfuse.geometry.blocks import BlockSet

BASE_COVARIATES = ("intercept", "x", "y")


def _as_extra(extra, n: int) -> np.ndarray:
    if extra is None:
        return np.zeros((n, 0))
    arr = np.asarray(extra, dtype=float)
    return arr.reshape(n, -1)


@dataclass(eq=False)
class ObservationSet:
    """一个时间范围 [1, T] 内的全部观测。缺失的卫星像元-天直接不出现。

    坐标协变量按 ``origin``（区域多边形质心）去中心化。
    """

    T: int
    origin: np.ndarray
    insitu_site: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    insitu_xy: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    insitu_t: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    insitu_value: np.ndarray = field(default_factory=lambda: np.zeros(0))
    insitu_extra: Optional[np.ndarray] = None
    sat_block: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    sat_t: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    sat_value: np.ndarray = field(default_factory=lambda: np.zeros(0))
    sat_extra: Optional[np.ndarray] = None
    extra_names: Tuple[str, ...] = ()

    def __post_init__(self) -> None:
        self.origin = np.asarray(self.origin, dtype=float).reshape(2)
        self.insitu_site = np.asarray(self.insitu_site, dtype=np.int64).ravel()
        self.insitu_xy = np.asarray(self.insitu_xy, dtype=float).reshape(-1, 2)
        self.insitu_t = np.asarray(self.insitu_t, dtype=np.int64).ravel()
        self.insitu_value = np.asarray(self.insitu_value, dtype=float).ravel()
        self.sat_block = np.asarray(self.sat_block, dtype=np.int64).ravel()
        self.sat_t = np.asarray(self.sat_t, dtype=np.int64).ravel()
        self.sat_value = np.asarray(self.sat_value, dtype=float).ravel()
        self.insitu_extra = _as_extra(self.insitu_extra, len(self.insitu_value))
        self.sat_extra = _as_extra(self.sat_extra, len(self.sat_value))
        self.extra_names = tuple(self.extra_names)
        self._validate()

    def _validate(self) -> None:
        if self.T < 1:
            raise ConfigError(f"T must be >= 1, got {self.T}")
        n = len(self.insitu_value)
        if not (len(self.insitu_site) == len(self.insitu_xy) == len(self.insitu_t) == n):
            raise ConfigError("in situ columns have different lengths")
        m = len(self.sat_value)
        if not (len(self.sat_block) == len(self.sat_t) == m):
            raise ConfigError("satellite columns have different lengths")
        for name, t in (("in situ", self.insitu_t), ("satellite", self.sat_t)):
            if len(t) and (t.min() < 1 or t.max() > self.T):
                raise ConfigError(f"{name} time index outside [1, {self.T}]")
        k = len(self.extra_names)
        if self.insitu_extra.shape[1] != k or self.sat_extra.shape[1] != k:
            raise ConfigError(f"every covariate vector must have {len(BASE_COVARIATES) + k} entries")
        if m:
            pairs = np.column_stack([self.sat_block, self.sat_t])
            if len(np.unique(pairs, axis=0)) != m:
                raise ConfigError("a satellite (block, t) pair appears more than once")
        if not (np.all(np.isfinite(self.insitu_value)) and np.all(np.isfinite(self.sat_value))):
            raise ConfigError("observation values must be finite")

    @property
    def n_insitu(self) -> int:
        return int(len(self.insitu_value))

    @property
    def n_satellite(self) -> int:
        return int(len(self.sat_value))

    @property
    def n_covariates(self) -> int:
        """p + 1."""
        return len(BASE_COVARIATES) + len(self.extra_names)

    @property
    def covariate_names(self) -> List[str]:
        return list(BASE_COVARIATES) + list(self.extra_names)

    def spatial_covariates(self, xy) -> np.ndarray:
        """(1, x - x̄, y - ȳ)。"""
        xy = np.asarray(xy, dtype=float).reshape(-1, 2)
        return np.column_stack([np.ones(len(xy)), xy - self.origin])

    def insitu_covariates(self) -> np.ndarray:
        return np.hstack([self.spatial_covariates(self.insitu_xy), self.insitu_extra])

    def satellite_covariates(self, blocks: BlockSet) -> np.ndarray:
        """block 协变量取 block 质心处的值。"""
        positions = [blocks.position(b) for b in self.sat_block]
        cent = blocks.centroids()[positions] if positions else np.zeros((0, 2))
        return np.hstack([self.spatial_covariates(cent), self.sat_extra])

    def restrict_days(self, last_day: int) -> "ObservationSet":
        """只保留 t <= last_day 的观测，T 不变（后面的天作为预测天）。"""
        keep_i = self.insitu_t <= last_day
        keep_s = self.sat_t <= last_day
        return self._subset(keep_i, keep_s)

    def drop_satellite(self, rows) -> "ObservationSet":
        """删除给定位置的卫星行。"""
        keep = np.ones(self.n_satellite, dtype=bool)
        keep[np.asarray(rows, dtype=np.int64)] = False
        return self._subset(np.ones(self.n_insitu, dtype=bool), keep)

    def _subset(self, keep_i: np.ndarray, keep_s: np.ndarray) -> "ObservationSet":
        return replace(
            self,
            insitu_site=self.insitu_site[keep_i],
            insitu_xy=self.insitu_xy[keep_i],
            insitu_t=self.insitu_t[keep_i],
            insitu_value=self.insitu_value[keep_i],
            insitu_extra=self.insitu_extra[keep_i],
            sat_block=self.sat_block[keep_s],
            sat_t=self.sat_t[keep_s],
            sat_value=self.sat_value[keep_s],
            sat_extra=self.sat_extra[keep_s],
        )

    def missing_cells(self, blocks: BlockSet, last_day: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
        """训练期内没有观测的 (block_id, t)，按 t 再按 block 顺序排列。"""
        last = self.T if last_day is None else last_day
        observed = set(zip(self.sat_block.tolist(), self.sat_t.tolist()))
        ids, ts = [], []
        for t in range(1, last + 1):
            for b in blocks.ids.tolist():
                if (b, t) not in observed:
                    ids.append(b)
                    ts.append(t)
        return np.asarray(ids, dtype=np.int64), np.asarray(ts, dtype=np.int64)

    def last_observed_day(self) -> int:
        days = np.concatenate([self.insitu_t, self.sat_t])
        return int(days.max()) if len(days) else 0
