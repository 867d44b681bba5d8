"""Tests for FEM assembly, Matérn conversions and the SPDE precision."""

from __future__ import annotations

import math
import sys
from pathlib import Path

import numpy as np
import pytest
from scipy.special import kv

# 添加 src 目录到路径
project_root = Path(__file__).resolve().parent.parent.parent
src_path = project_root / "src"
if str(src_path) not in sys.path:
    sys.path.insert(0, str(src_path))

from stfuse.exceptions import ConfigError, GeometryError
from stfuse.geometry.mesh import Mesh, build_mesh
from stfuse.spde import convert_params, fem_matrices, marginal_variance, matern_cov, precision_spatial

UNIT_SQUARE = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]


def _single_triangle(vertices) -> Mesh:
    return Mesh(
        vertices=np.asarray(vertices, dtype=float),
        triangles=np.array([[0, 1, 2]]),
        zone=np.ones(3, dtype=bool),
        max_edge_inner=1.0,
        max_edge_outer=1.0,
        outer_pad=0.0,
    )


def test_single_triangle_matrices() -> None:
    fem = fem_matrices(_single_triangle([(0, 0), (1, 0), (0, 1)]))
    expected = np.array([[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]])
    assert np.allclose(fem.G_stiff.toarray(), expected, atol=1e-15)
    assert np.allclose(fem.C_lumped, 1.0 / 6.0)


def test_degenerate_triangle() -> None:
    with pytest.raises(GeometryError):
        fem_matrices(_single_triangle([(0, 0), (1, 0), (2, 0)]))


def test_fem_invariants() -> None:
    mesh = build_mesh(UNIT_SQUARE, 0.1, outer_pad=0.3, max_edge_outer=0.15)
    fem = fem_matrices(mesh)
    G = fem.G_stiff
    assert np.allclose(np.asarray(G.sum(axis=1)).ravel(), 0.0, atol=1e-10)
    assert abs(G - G.T).max() < 1e-12
    assert np.all(fem.C_lumped > 0)
    assert fem.C_lumped.sum() == pytest.approx(mesh.total_area(), abs=1e-10)
    assert np.linalg.eigvalsh(G.toarray()).min() > -1e-10


def test_convert_params_reference_values() -> None:
    p = convert_params(7.0, 0.25)
    assert p.tau_omega == pytest.approx(0.08060, abs=5e-6)
    assert p.range == pytest.approx(0.4041, abs=5e-5)
    assert marginal_variance(p.kappa, p.tau_omega) == pytest.approx(0.25, rel=1e-12)


def test_convert_params_scaling() -> None:
    a = convert_params(3.0, 0.5)
    b = convert_params(6.0, 0.5)
    assert b.range == pytest.approx(a.range / 2.0, rel=1e-12)
    assert b.tau_omega == pytest.approx(a.tau_omega / 2.0, rel=1e-12)
    with pytest.raises(ConfigError):
        convert_params(-1.0, 0.5)
    with pytest.raises(ConfigError):
        convert_params(1.0, 0.5, nu=1.5)


def test_matern_cov_values() -> None:
    assert matern_cov(0.0, 7.0, 0.25) == 0.25
    d = math.sqrt(8.0) / 7.0
    value = matern_cov(d, 7.0, 0.25)
    assert value == pytest.approx(0.25 * 7.0 * d * kv(1, 7.0 * d), rel=1e-10)
    assert value == pytest.approx(0.0349, abs=5e-4)
    grid = np.linspace(0.0, 2.0, 400)
    assert np.all(np.diff(matern_cov(grid, 7.0, 0.25)) <= 0.0)


def test_precision_spatial_is_spd() -> None:
    mesh = build_mesh(UNIT_SQUARE, 0.1)
    p = convert_params(7.0, 0.25)
    Q = precision_spatial(fem_matrices(mesh), p.kappa, p.tau_omega)
    assert Q.factor().logdet == pytest.approx(np.linalg.slogdet(Q.toarray())[1], rel=1e-8)
    with pytest.raises(ConfigError):
        precision_spatial(fem_matrices(mesh), 0.0, 1.0)


def test_spde_matches_matern_in_the_interior() -> None:
    mesh = build_mesh(UNIT_SQUARE, 0.02, outer_pad=0.4, max_edge_outer=0.2)
    p = convert_params(7.0, 0.25)
    Q = precision_spatial(fem_matrices(mesh), p.kappa, p.tau_omega)
    v = mesh.vertices
    centre = int(np.argmin(np.linalg.norm(v - 0.5, axis=1)))
    e = np.zeros(mesh.n_vertices)
    e[centre] = 1.0
    cov = Q.solve(e)

    assert cov[centre] == pytest.approx(0.25, rel=0.15)
    same_row = np.flatnonzero(np.abs(v[:, 1] - v[centre, 1]) < 1e-9)
    d = np.abs(v[same_row, 0] - v[centre, 0])
    near = same_row[(d > 0) & (d <= 1.5 * p.range)]
    dist = np.abs(v[near, 0] - v[centre, 0])
    assert np.all(np.abs(cov[near] - matern_cov(dist, 7.0, 0.25)) <= 0.05 * 0.25)
