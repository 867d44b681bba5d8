"""
几何模块

网格构造、block 集合以及点/block 到网格顶点的投影矩阵。
"""

from .blocks import BlockSet, GridSpec
from .mesh import Mesh, build_mesh
from .polygon import default_domain, points_in_polygon, polygon_area, polygon_centroid, sample_in_polygon
from .projection import (
    BLOCK,
    POINT,
    ProjMatrix,
    barycentric_rows,
    block_projection,
    locate_points,
    point_projection,
    spacetime_blockdiag,
)

__all__ = [
    "BLOCK",
    "POINT",
    "BlockSet",
    "GridSpec",
    "Mesh",
    "ProjMatrix",
    "barycentric_rows",
    "block_projection",
    "build_mesh",
    "default_domain",
    "locate_points",
    "point_projection",
    "points_in_polygon",
    "polygon_area",
    "polygon_centroid",
    "sample_in_polygon",
    "spacetime_blockdiag",
]
