"""P1 有限元矩阵：集中质量矩阵 C 与刚度矩阵 G。"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from stfuse.exceptions import GeometryError
from stfuse.geometry.mesh import Mesh

logger = logging.getLogger(__name__)

MIN_TRIANGLE_AREA = 1e-14


@dataclass(frozen=True, eq=False)
class FemMatrices:
    C_lumped: np.ndarray
    G_stiff: sp.csr_matrix

    @property
    def n_vertices(self) -> int:
        return int(self.C_lumped.shape[0])

    @property
    def C(self) -> sp.dia_matrix:
        return sp.diags(self.C_lumped)

    @property
    def C_inv(self) -> sp.dia_matrix:
        return sp.diags(1.0 / self.C_lumped)


def fem_matrices(mesh: Mesh) -> FemMatrices:
    """组装线性帽函数的集中质量（每个三角形面积的 1/3 分给三个顶点）和刚度矩阵。

    Raises:
        GeometryError: 某个三角形面积小于 1e-14
    """
    v = mesh.vertices
    tri = mesh.triangles
    x = v[tri, 0]
    y = v[tri, 1]

    area = mesh.signed_areas()
    bad = np.flatnonzero(area < MIN_TRIANGLE_AREA)
    if len(bad):
        raise GeometryError(f"triangle {int(bad[0])} is degenerate (area {area[bad[0]]:.3g})", index=int(bad[0]))

    # 帽函数梯度系数 b_i = y_j - y_k, c_i = x_k - x_j
    b = np.column_stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]])
    c = np.column_stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]])
    local = (b[:, :, None] * b[:, None, :] + c[:, :, None] * c[:, None, :]) / (4.0 * area)[:, None, None]

    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    n = mesh.n_vertices
    G = sp.csr_matrix((local.ravel(), (rows, cols)), shape=(n, n))
    G.sum_duplicates()

    C_lumped = np.bincount(tri.ravel(), weights=np.repeat(area / 3.0, 3), minlength=n)
    if np.any(C_lumped <= 0.0):
        idx = int(np.flatnonzero(C_lumped <= 0.0)[0])
        raise GeometryError(f"vertex {idx} belongs to no triangle", index=idx)

    logger.debug("FEM matrices assembled: G nnz=%d", G.nnz)
    return FemMatrices(C_lumped=C_lumped, G_stiff=G)
