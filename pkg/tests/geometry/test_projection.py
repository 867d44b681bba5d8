"""Tests for point, block and space-time projection matrices."""

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

from stfuse.exceptions import ConfigError, GeometryError
from stfuse.geometry import BlockSet, block_projection, build_mesh, point_projection, spacetime_blockdiag

UNIT_SQUARE = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]


@pytest.fixture(scope="module")
def mesh():
    return build_mesh(UNIT_SQUARE, 0.5)


def test_point_on_vertex(mesh) -> None:
    A = point_projection(mesh, [[0.5, 0.5]]).matrix.toarray()
    expected = np.zeros(9)
    expected[4] = 1.0
    assert np.array_equal(A[0], expected)


def test_point_at_triangle_centroid(mesh) -> None:
    tri = mesh.triangles[0]
    centroid = mesh.vertices[tri].mean(axis=0)
    row = point_projection(mesh, centroid[None, :]).matrix.toarray()[0]
    assert np.allclose(row[tri], 1.0 / 3.0, atol=1e-14)
    assert np.count_nonzero(row) == 3


def test_random_points_reproduce_affine_functions() -> None:
    mesh = build_mesh(UNIT_SQUARE, 0.2)
    rng = np.random.default_rng(3)
    pts = rng.uniform(0.0, 1.0, size=(100, 2))
    P = point_projection(mesh, pts)
    assert np.allclose(P.row_sums(), 1.0, atol=1e-12)
    assert P.matrix.min() >= 0.0
    assert np.all(np.diff(P.matrix.indptr) <= 3)
    f = 2.0 * mesh.vertices[:, 0] - 3.0 * mesh.vertices[:, 1] + 0.5
    assert np.allclose(P.matrix @ f, 2.0 * pts[:, 0] - 3.0 * pts[:, 1] + 0.5, atol=1e-10)


def test_point_outside_mesh(mesh) -> None:
    with pytest.raises(GeometryError) as info:
        point_projection(mesh, [[0.2, 0.2], [1.5, 0.2]])
    assert info.value.index == 1


def test_block_equal_weights(mesh) -> None:
    # y = 0 这一行的三个顶点 0, 1, 2
    blocks = BlockSet(ids=[10], rects=[(-0.1, -0.1, 1.2, 0.2)])
    row = block_projection(mesh, blocks).matrix.toarray()[0]
    assert np.allclose(row[[0, 1, 2]], 1.0 / 3.0)
    assert np.count_nonzero(row) == 3


def test_empty_block_uses_centroid(mesh) -> None:
    blocks = BlockSet(ids=[0], rects=[(0.1, 0.05, 0.1, 0.1)])
    row = block_projection(mesh, blocks).matrix.toarray()[0]
    centroid_row = point_projection(mesh, [[0.15, 0.1]]).matrix.toarray()[0]
    assert np.allclose(row, centroid_row, atol=1e-14)
    assert row.sum() == pytest.approx(1.0, abs=1e-12)


def test_block_outside_mesh(mesh) -> None:
    blocks = BlockSet(ids=[0, 1], rects=[(0.0, 0.0, 0.5, 0.5), (5.0, 5.0, 1.0, 1.0)])
    with pytest.raises(GeometryError):
        block_projection(mesh, blocks)


def test_spacetime_single_day(mesh) -> None:
    A = point_projection(mesh, [[0.1, 0.1], [0.7, 0.4]])
    st = spacetime_blockdiag(A, 1, [(1, 0), (1, 1)])
    assert np.array_equal(st.matrix.toarray(), A.matrix.toarray())


def test_spacetime_block_structure(mesh) -> None:
    pts = [[0.1, 0.1], [0.7, 0.4], [0.3, 0.9], [0.5, 0.5]]
    A = point_projection(mesh, pts)
    pairs = [(t, r) for t in (1, 2, 3) for r in range(4)]
    st = spacetime_blockdiag(A, 3, pairs)
    G = mesh.n_vertices
    assert st.shape == (12, 3 * G)
    dense = st.matrix.toarray()
    day2 = dense[st.times == 2]
    assert np.count_nonzero(day2[:, :G]) == 0
    assert np.count_nonzero(day2[:, 2 * G:]) == 0
    assert np.allclose(st.row_sums(), 1.0, atol=1e-12)


def test_spacetime_missing_rows(mesh) -> None:
    A = point_projection(mesh, [[0.1, 0.1], [0.7, 0.4]])
    st = spacetime_blockdiag(A, 2, [(1, 0), (1, 1), (2, 1)])
    G = mesh.n_vertices
    assert st.n_rows == 3
    expected = np.zeros(2 * G)
    expected[G:] = A.matrix.toarray()[1]
    assert np.array_equal(st.matrix.toarray()[2], expected)


def test_spacetime_rejects_duplicates(mesh) -> None:
    A = point_projection(mesh, [[0.1, 0.1]])
    with pytest.raises(ConfigError):
        spacetime_blockdiag(A, 2, [(1, 0), (1, 0)])
    with pytest.raises(ConfigError):
        spacetime_blockdiag(A, 2, [(3, 0)])
