"""Tests for the lattice triangulation and block sets."""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

# 添加 src 目录到路径
project_root = Path(__file__).resolve().parent.parent.parent
src_path = project_root / "src"
if str(src_path) not in sys.path:
    sys.path.insert(0, str(src_path))

from stfuse.exceptions import ConfigError, DomainError
from stfuse.geometry import BlockSet, GridSpec, build_mesh, default_domain

UNIT_SQUARE = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]


def test_unit_square_half_pitch() -> None:
    mesh = build_mesh(UNIT_SQUARE, 0.5)
    assert mesh.n_vertices == 9
    assert mesh.n_triangles == 8
    assert np.all(mesh.signed_areas() > 0)
    assert mesh.zone.all()
    assert mesh.total_area() == pytest.approx(1.0, abs=1e-12)


def test_no_pad_stays_in_bounding_box() -> None:
    ring = np.array([(0.1, 0.2), (0.9, 0.3), (0.6, 0.8), (0.2, 0.7)])
    mesh = build_mesh(ring, 0.07)
    lo = ring.min(axis=0) - 0.07
    hi = ring.max(axis=0) + 0.07
    assert np.all(mesh.vertices >= lo) and np.all(mesh.vertices <= hi)
    # 包围盒外的顶点被标为 outer
    assert not mesh.zone.all()


def test_lake_domain_edges_and_extension() -> None:
    domain = default_domain()
    mesh = build_mesh(domain, 0.05, outer_pad=0.2, max_edge_outer=0.2)
    v = mesh.vertices
    e = mesh.edges()
    d = v[e[:, 1]] - v[e[:, 0]]
    axis = (np.abs(d[:, 0]) < 1e-12) | (np.abs(d[:, 1]) < 1e-12)
    length = np.linalg.norm(d, axis=1)
    inner = mesh.zone[e[:, 0]] & mesh.zone[e[:, 1]]
    assert np.all(length[axis & inner] <= 0.05 + 1e-12)
    assert np.all(length[axis] <= 0.2 + 1e-12)
    assert np.all(length <= 0.2 * np.sqrt(2.0) + 1e-12)

    xmin, ymin, xmax, ymax = mesh.bounds
    assert xmin <= domain[:, 0].min() - 0.2 + 1e-9
    assert ymin <= domain[:, 1].min() - 0.2 + 1e-9
    assert xmax >= domain[:, 0].max() + 0.2 - 1e-9
    assert ymax >= domain[:, 1].max() + 0.2 - 1e-9
    assert np.all(mesh.signed_areas() > 0)


def test_mesh_is_deterministic() -> None:
    a = build_mesh(default_domain(), 0.1, 0.2, 0.2)
    b = build_mesh(default_domain(), 0.1, 0.2, 0.2)
    assert np.array_equal(a.vertices, b.vertices)
    assert np.array_equal(a.triangles, b.triangles)
    assert np.array_equal(a.zone, b.zone)


def test_mesh_rejects_bad_input() -> None:
    with pytest.raises(DomainError):
        build_mesh([(0, 0), (1, 1), (2, 2)], 0.5)
    with pytest.raises(ConfigError):
        build_mesh(UNIT_SQUARE, 0.0)
    with pytest.raises(ConfigError):
        build_mesh(UNIT_SQUARE, 0.5, outer_pad=0.1, max_edge_outer=0.2)
    with pytest.raises(ConfigError):
        build_mesh(UNIT_SQUARE, 0.5, outer_pad=-0.1)


def test_block_set_from_grid() -> None:
    grid = GridSpec(0.0, 0.0, 0.25, 0.5, 4, 2)
    blocks = BlockSet.from_grid(grid, keep=[5, 1])
    assert blocks.ids.tolist() == [1, 5]
    assert blocks.position(5) == 1
    assert blocks.area(0) == pytest.approx(0.125)
    assert np.allclose(blocks.centroid(1), [0.375, 0.75])
    with pytest.raises(ConfigError):
        blocks.position(7)


def test_block_set_rejects_duplicates() -> None:
    with pytest.raises(ConfigError):
        BlockSet(ids=[1, 1], rects=[(0, 0, 1, 1), (1, 0, 1, 1)])
    with pytest.raises(ConfigError):
        BlockSet(ids=[1], rects=[(0, 0, 0, 1)])
