"""投影矩阵：把点观测、block 观测和预测位置映射到网格顶点的基函数权重上。"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from stfuse.exceptions import ConfigError, GeometryError
from stfuse.geometry.blocks import BlockSet
from stfuse.geometry.mesh import Mesh

logger = logging.getLogger(__name__)

POINT = "point"
BLOCK = "block"

# 重心坐标的容差：在边上的点会出现 -1e-17 量级的负值
BARY_TOL = 1e-12
# 小于该值的权重直接置零（顶点处的点只保留一个非零元）
WEIGHT_SNAP = 1e-14


@dataclass(frozen=True, eq=False)
class ProjMatrix:
    """Sparse row-major projection with per-row metadata.

    ``times`` is 0 for single-time matrices and the 1-based day otherwise.
    """

    matrix: sp.csr_matrix
    times: np.ndarray
    kinds: np.ndarray
    source_ids: np.ndarray
    n_vertices: int
    n_times: int = 1

    @property
    def shape(self) -> Tuple[int, int]:
        return self.matrix.shape

    @property
    def n_rows(self) -> int:
        return int(self.matrix.shape[0])

    def row_sums(self) -> np.ndarray:
        return np.asarray(self.matrix.sum(axis=1)).ravel()


def _triangle_coefficients(mesh: Mesh):
    v = mesh.vertices
    t = mesh.triangles
    a, b, c = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]
    det = (b[:, 1] - c[:, 1]) * (a[:, 0] - c[:, 0]) + (c[:, 0] - b[:, 0]) * (a[:, 1] - c[:, 1])
    return a, b, c, det


def locate_points(mesh: Mesh, points, chunk_elems: int = 2_000_000) -> Tuple[np.ndarray, np.ndarray]:
    """返回每个点所在三角形的编号（不在网格内为 -1）及其重心坐标。

    点落在多个三角形的公共边上时取编号最小的三角形。
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    a, b, c, det = _triangle_coefficients(mesh)
    n_tri = len(det)
    tri = np.full(len(pts), -1, dtype=np.int64)
    bary = np.zeros((len(pts), 3))
    step = max(1, chunk_elems // max(n_tri, 1))

    for start in range(0, len(pts), step):
        px = pts[start:start + step, 0][:, None]
        py = pts[start:start + step, 1][:, None]
        l1 = ((b[:, 1] - c[:, 1]) * (px - c[:, 0]) + (c[:, 0] - b[:, 0]) * (py - c[:, 1])) / det
        l2 = ((c[:, 1] - a[:, 1]) * (px - c[:, 0]) + (a[:, 0] - c[:, 0]) * (py - c[:, 1])) / det
        l3 = 1.0 - l1 - l2
        inside = (l1 >= -BARY_TOL) & (l2 >= -BARY_TOL) & (l3 >= -BARY_TOL)
        found = inside.any(axis=1)
        first = inside.argmax(axis=1)
        rows = np.arange(len(first))
        sl = slice(start, start + len(first))
        tri[sl] = np.where(found, first, -1)
        bary[sl] = np.column_stack([l1[rows, first], l2[rows, first], l3[rows, first]])
    bary[tri < 0] = 0.0
    return tri, bary


def _clean_weights(bary: np.ndarray) -> np.ndarray:
    w = np.where(bary > WEIGHT_SNAP, bary, 0.0)
    return w / w.sum(axis=1, keepdims=True)


def barycentric_rows(mesh: Mesh, points) -> sp.csr_matrix:
    """每行是一个点的重心坐标权重（≤ 3 个非零元），点在网格外时报 GeometryError。"""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    tri, bary = locate_points(mesh, pts)
    outside = np.flatnonzero(tri < 0)
    if len(outside):
        i = int(outside[0])
        raise GeometryError(
            f"point {i} at ({pts[i, 0]:.6g}, {pts[i, 1]:.6g}) lies outside the mesh "
            f"({len(outside)} point(s) outside in total)",
            index=i,
        )
    weights = _clean_weights(bary)
    rows = np.repeat(np.arange(len(pts)), 3)
    cols = mesh.triangles[tri].ravel()
    mat = sp.csr_matrix((weights.ravel(), (rows, cols)), shape=(len(pts), mesh.n_vertices))
    mat.eliminate_zeros()
    return mat


def point_projection(mesh: Mesh, points) -> ProjMatrix:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    mat = barycentric_rows(mesh, pts)
    n = len(pts)
    return ProjMatrix(
        matrix=mat,
        times=np.zeros(n, dtype=np.int64),
        kinds=np.full(n, POINT),
        source_ids=np.arange(n, dtype=np.int64),
        n_vertices=mesh.n_vertices,
    )


def block_projection(mesh: Mesh, blocks: BlockSet) -> ProjMatrix:
    """block j 内含 m ≥ 1 个顶点时每个顶点权重 1/m；m = 0 时退化为 block 质心的重心坐标。"""
    rows, cols, vals = [], [], []
    empty = []
    for k in range(len(blocks)):
        inside = np.flatnonzero(blocks.contains(k, mesh.vertices))
        if len(inside):
            rows.append(np.full(len(inside), k))
            cols.append(inside)
            vals.append(np.full(len(inside), 1.0 / len(inside)))
        else:
            empty.append(k)

    if empty:
        centroids = np.array([blocks.centroid(k) for k in empty])
        tri, bary = locate_points(mesh, centroids)
        missing = np.flatnonzero(tri < 0)
        if len(missing):
            k = empty[int(missing[0])]
            raise GeometryError(f"block {int(blocks.ids[k])} lies entirely outside the mesh", index=k)
        weights = _clean_weights(bary)
        for pos, k in enumerate(empty):
            keep = weights[pos] > 0.0
            rows.append(np.full(int(keep.sum()), k))
            cols.append(mesh.triangles[tri[pos]][keep])
            vals.append(weights[pos][keep])
        logger.debug("%d block(s) contain no vertex; using centroid weights", len(empty))

    mat = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(len(blocks), mesh.n_vertices),
    )
    n = len(blocks)
    return ProjMatrix(
        matrix=mat,
        times=np.zeros(n, dtype=np.int64),
        kinds=np.full(n, BLOCK),
        source_ids=blocks.ids.copy(),
        n_vertices=mesh.n_vertices,
    )


def spacetime_blockdiag(A: ProjMatrix, T: int, observed: Iterable[Sequence[int]]) -> ProjMatrix:
    """把 A 放到 T 个对角块上，再只保留观测到的 (t, row) 行。

    ``t`` 从 1 开始，``row`` 是 A 的 0 起行号；缺失的行直接丢弃。
    """
    if T < 1:
        raise ConfigError(f"T must be >= 1, got {T}")
    pairs = np.asarray(list(observed), dtype=np.int64).reshape(-1, 2)
    t, r = pairs[:, 0], pairs[:, 1]
    if np.any((t < 1) | (t > T)):
        raise ConfigError(f"observed time indices must lie in [1, {T}]")
    if np.any((r < 0) | (r >= A.n_rows)):
        raise ConfigError(f"observed row indices must lie in [0, {A.n_rows})")
    if len(np.unique(pairs, axis=0)) != len(pairs):
        raise ConfigError("duplicate (t, row) pair in observed set")

    G = A.n_vertices
    sub = A.matrix[r].tocoo()
    cols = sub.col + (t[sub.row] - 1) * G
    mat = sp.csr_matrix((sub.data, (sub.row, cols)), shape=(len(pairs), G * T))
    return ProjMatrix(
        matrix=mat,
        times=t.copy(),
        kinds=A.kinds[r],
        source_ids=A.source_ids[r],
        n_vertices=G,
        n_times=T,
    )
