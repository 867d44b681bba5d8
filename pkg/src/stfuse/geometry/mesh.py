"""研究区域的三角剖分。

网格是一个张量积格点：区域包围盒内按 ``max_edge_inner`` 的细间距布点，
外扩带 ``outer_pad`` 内按 ``max_edge_outer`` 的粗间距布点，每个矩形单元
沿对角线切成两个逆时针直角三角形。顶点按点在多边形内的判断标记为
inner / outer。构造过程没有随机性。
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from stfuse.exceptions import ConfigError, DomainError
from stfuse.geometry.polygon import as_ring, points_in_polygon, polygon_area

logger = logging.getLogger(__name__)

# 面积小于该值的多边形视为退化
MIN_DOMAIN_AREA = 1e-14


@dataclass(frozen=True, eq=False)
class Mesh:
    vertices: np.ndarray
    triangles: np.ndarray
    zone: np.ndarray  # True = inner
    max_edge_inner: float
    max_edge_outer: float
    outer_pad: float

    def __post_init__(self) -> None:
        for arr in (self.vertices, self.triangles, self.zone):
            arr.setflags(write=False)

    @property
    def n_vertices(self) -> int:
        return int(self.vertices.shape[0])

    @property
    def n_triangles(self) -> int:
        return int(self.triangles.shape[0])

    @property
    def bounds(self) -> Tuple[float, float, float, float]:
        """(xmin, ymin, xmax, ymax) of the meshed region."""
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])

    def signed_areas(self) -> np.ndarray:
        a = self.vertices[self.triangles[:, 0]]
        b = self.vertices[self.triangles[:, 1]]
        c = self.vertices[self.triangles[:, 2]]
        return 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (c[:, 0] - a[:, 0]) * (b[:, 1] - a[:, 1]))

    def total_area(self) -> float:
        return float(np.abs(self.signed_areas()).sum())

    def edges(self) -> np.ndarray:
        """Unique undirected edges as an (E, 2) array with ``e[:, 0] < e[:, 1]``."""
        t = self.triangles
        pairs = np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        pairs.sort(axis=1)
        return np.unique(pairs, axis=0)

    def edge_lengths(self) -> np.ndarray:
        e = self.edges()
        return np.linalg.norm(self.vertices[e[:, 0]] - self.vertices[e[:, 1]], axis=1)

    def distance_to_boundary(self) -> np.ndarray:
        """每个顶点到网格外边界（矩形）的距离。"""
        xmin, ymin, xmax, ymax = self.bounds
        v = self.vertices
        return np.minimum.reduce([v[:, 0] - xmin, xmax - v[:, 0], v[:, 1] - ymin, ymax - v[:, 1]])


def _ticks(lo: float, hi: float, pitch: float) -> np.ndarray:
    n = max(1, int(math.ceil((hi - lo) / pitch - 1e-9)))
    return np.linspace(lo, hi, n + 1)


def _axis(lo: float, hi: float, inner: float, pad: float, outer: float) -> np.ndarray:
    fine = _ticks(lo, hi, inner)
    if pad <= 0.0:
        return fine
    left = _ticks(lo - pad, lo, outer)[:-1]
    right = _ticks(hi, hi + pad, outer)[1:]
    return np.concatenate([left, fine, right])


def build_mesh(domain, max_edge_inner: float, outer_pad: float = 0.0, max_edge_outer: float | None = None) -> Mesh:
    """构造覆盖 ``domain`` 外扩 ``outer_pad`` 后区域的三角网格。

    Args:
        domain: 多边形顶点 (K, 2)，首尾可以重复
        max_edge_inner: 区域内格点间距上限
        outer_pad: 外扩带宽度
        max_edge_outer: 外扩带格点间距上限，默认等于 ``max_edge_inner``

    Raises:
        ConfigError: 边长参数非正、内外边长顺序错误或 outer_pad 为负
        DomainError: 多边形面积为 0
    """
    if max_edge_outer is None:
        max_edge_outer = max_edge_inner
    if not (max_edge_inner > 0.0 and max_edge_outer > 0.0):
        raise ConfigError(
            f"edge lengths must be positive (max_edge_inner={max_edge_inner}, max_edge_outer={max_edge_outer})"
        )
    if max_edge_inner > max_edge_outer:
        raise ConfigError(f"max_edge_inner={max_edge_inner} exceeds max_edge_outer={max_edge_outer}")
    if outer_pad < 0.0:
        raise ConfigError(f"outer_pad must be non-negative, got {outer_pad}")

    ring = as_ring(domain)
    if polygon_area(ring) < MIN_DOMAIN_AREA:
        raise DomainError("domain polygon is degenerate (area 0)")

    xmin, ymin = ring.min(axis=0)
    xmax, ymax = ring.max(axis=0)
    xs = _axis(float(xmin), float(xmax), max_edge_inner, outer_pad, max_edge_outer)
    ys = _axis(float(ymin), float(ymax), max_edge_inner, outer_pad, max_edge_outer)
    nx, ny = len(xs), len(ys)

    gx, gy = np.meshgrid(xs, ys)
    vertices = np.column_stack([gx.ravel(), gy.ravel()])

    # 单元 (i, j) 的四个角，行优先编号 j * nx + i
    i, j = np.meshgrid(np.arange(nx - 1), np.arange(ny - 1))
    v00 = (j * nx + i).ravel()
    v10 = v00 + 1
    v01 = v00 + nx
    v11 = v01 + 1
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    triangles = np.empty((2 * len(v00), 3), dtype=np.int64)
    triangles[0::2] = lower
    triangles[1::2] = upper

    zone = points_in_polygon(vertices, ring)
    mesh = Mesh(
        vertices=vertices,
        triangles=triangles,
        zone=zone,
        max_edge_inner=float(max_edge_inner),
        max_edge_outer=float(max_edge_outer),
        outer_pad=float(outer_pad),
    )
    logger.info(
        "mesh built: %d vertices (%d inner), %d triangles", mesh.n_vertices, int(zone.sum()), mesh.n_triangles
    )
    return mesh
