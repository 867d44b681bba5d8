"""卫星像元（block）集合。"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from stfuse.exceptions import ConfigError
from stfuse.geometry.polygon import BOUNDARY_TOL, as_ring, points_in_polygon, polygon_area, polygon_centroid


@dataclass(frozen=True)
class GridSpec:
    """Regular pixel grid: lower-left corner, cell size and cell counts."""

    x0: float
    y0: float
    dx: float
    dy: float
    nx: int
    ny: int

    def __post_init__(self) -> None:
        if self.dx <= 0 or self.dy <= 0:
            raise ConfigError(f"grid cell size must be positive, got dx={self.dx}, dy={self.dy}")
        if self.nx < 1 or self.ny < 1:
            raise ConfigError(f"grid needs at least one cell, got nx={self.nx}, ny={self.ny}")

    @property
    def n_cells(self) -> int:
        return self.nx * self.ny

    def cell_rect(self, block_id: int) -> np.ndarray:
        """(x0, y0, dx, dy) of the row-major cell ``block_id``."""
        iy, ix = divmod(int(block_id), self.nx)
        return np.array([self.x0 + ix * self.dx, self.y0 + iy * self.dy, self.dx, self.dy])


@dataclass(frozen=True, eq=False)
class BlockSet:
    """轴对齐矩形或一般多边形组成的 block 集合。

    ``rects`` 为 (J, 4) 的 (x0, y0, dx, dy)；若为 None 则使用 ``polygons``。
    """

    ids: np.ndarray
    rects: Optional[np.ndarray] = None
    polygons: List[np.ndarray] = field(default_factory=list)

    def __post_init__(self) -> None:
        ids = np.asarray(self.ids, dtype=np.int64)
        object.__setattr__(self, "ids", ids)
        if len(np.unique(ids)) != len(ids):
            raise ConfigError("block ids must be unique")
        if self.rects is not None:
            rects = np.asarray(self.rects, dtype=float).reshape(-1, 4)
            object.__setattr__(self, "rects", rects)
            if len(rects) != len(ids):
                raise ConfigError("one rectangle per block id is required")
            if np.any(rects[:, 2] <= 0) or np.any(rects[:, 3] <= 0):
                raise ConfigError("blocks must have positive area")
        else:
            rings = [as_ring(p) for p in self.polygons]
            object.__setattr__(self, "polygons", rings)
            if len(rings) != len(ids):
                raise ConfigError("one polygon per block id is required")
            if any(polygon_area(r) <= 0 for r in rings):
                raise ConfigError("blocks must have positive area")
        object.__setattr__(self, "_index", {int(b): k for k, b in enumerate(ids)})

    def __len__(self) -> int:
        return len(self.ids)

    @classmethod
    def from_grid(cls, grid: GridSpec, keep: Optional[Sequence[int]] = None) -> "BlockSet":
        ids = np.arange(grid.n_cells) if keep is None else np.asarray(sorted(keep), dtype=np.int64)
        rects = np.array([grid.cell_rect(b) for b in ids]).reshape(-1, 4)
        return cls(ids=ids, rects=rects)

    def position(self, block_id: int) -> int:
        """Row position of ``block_id`` inside the set."""
        try:
            return self._index[int(block_id)]
        except KeyError as exc:
            raise ConfigError(f"unknown block id {block_id}") from exc

    def area(self, k: int) -> float:
        if self.rects is not None:
            return float(self.rects[k, 2] * self.rects[k, 3])
        return polygon_area(self.polygons[k])

    def centroid(self, k: int) -> np.ndarray:
        if self.rects is not None:
            x0, y0, dx, dy = self.rects[k]
            return np.array([x0 + 0.5 * dx, y0 + 0.5 * dy])
        return polygon_centroid(self.polygons[k])

    def centroids(self) -> np.ndarray:
        return np.array([self.centroid(k) for k in range(len(self))]).reshape(-1, 2)

    def ring(self, k: int) -> np.ndarray:
        if self.rects is not None:
            x0, y0, dx, dy = self.rects[k]
            return np.array([[x0, y0], [x0 + dx, y0], [x0 + dx, y0 + dy], [x0, y0 + dy]])
        return self.polygons[k]

    def contains(self, k: int, points: np.ndarray) -> np.ndarray:
        """闭区域包含判断（边界上的点算在内）。"""
        if self.rects is not None:
            x0, y0, dx, dy = self.rects[k]
            tol = BOUNDARY_TOL
            return (
                (points[:, 0] >= x0 - tol)
                & (points[:, 0] <= x0 + dx + tol)
                & (points[:, 1] >= y0 - tol)
                & (points[:, 1] <= y0 + dy + tol)
            )
        return points_in_polygon(points, self.polygons[k])

    def subset(self, positions: Sequence[int]) -> "BlockSet":
        positions = list(positions)
        if self.rects is not None:
            return BlockSet(ids=self.ids[positions], rects=self.rects[positions])
        return BlockSet(ids=self.ids[positions], polygons=[self.polygons[k] for k in positions])
