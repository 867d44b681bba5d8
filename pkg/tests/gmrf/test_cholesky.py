"""Sparse Cholesky against dense oracles."""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest
import scipy.sparse as sp

# 添加 src 目录到路径
project_root = Path(__file__).resolve().parent.parent.parent
src_path = project_root / "src"
if str(src_path) not in sys.path:
    sys.path.insert(0, str(src_path))

from stfuse.exceptions import NumericalError
from stfuse.gmrf import SparseSym, clear_symbolic_cache, factorize, fill_reducing_order, logdet, minimum_degree, solve


def _random_spd(rng: np.random.Generator, n: int, density: float) -> np.ndarray:
    A = sp.random(n, n, density=density, random_state=rng).toarray()
    A = A + A.T
    return A + np.diag(np.abs(A).sum(axis=1) + 1.0)


@pytest.mark.parametrize("case", range(25))
def test_random_spd_matches_dense(case: int) -> None:
    rng = np.random.default_rng(1000 + case)
    n = int(rng.integers(2, 60))
    dense = _random_spd(rng, n, float(rng.uniform(0.02, 0.3)))
    Q = SparseSym.from_matrix(dense)
    b = rng.standard_normal(n)

    F = factorize(Q)
    assert F.jitter == 0.0
    assert np.allclose(F.solve(b), np.linalg.solve(dense, b), rtol=1e-9, atol=1e-11)
    assert F.logdet == pytest.approx(np.linalg.slogdet(dense)[1], rel=1e-10, abs=1e-10)

    L = F.L().toarray()
    P = np.eye(n)[F.perm]
    assert np.allclose(L @ L.T, P @ dense @ P.T, atol=1e-10)


def test_multiple_right_hand_sides() -> None:
    rng = np.random.default_rng(7)
    dense = _random_spd(rng, 30, 0.1)
    Q = SparseSym.from_matrix(dense)
    B = rng.standard_normal((30, 4))
    assert np.allclose(solve(Q, B), np.linalg.solve(dense, B))
    assert logdet(Q) == pytest.approx(np.linalg.slogdet(dense)[1])


def test_quad_form_and_row_variances() -> None:
    rng = np.random.default_rng(11)
    dense = _random_spd(rng, 20, 0.2)
    F = SparseSym.from_matrix(dense).factor()
    cov = np.linalg.inv(dense)
    b = rng.standard_normal(20)
    assert F.quad_form(b) == pytest.approx(b @ cov @ b, rel=1e-10)
    B = rng.standard_normal((5, 20))
    assert np.allclose(F.row_variances(B), np.einsum("ij,jk,ik->i", B, cov, B))


def test_not_positive_definite() -> None:
    Q = SparseSym.from_matrix(np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(NumericalError):
        factorize(Q)


def test_jitter_rescues_singular_matrix() -> None:
    # 内禀 GMRF：行和为零的一维随机游走
    n = 6
    dense = 2.0 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)
    dense[0, 0] = dense[-1, -1] = 1.0
    F = factorize(SparseSym.from_matrix(dense))
    assert F.jitter > 0.0


def test_symbolic_reuse_across_values() -> None:
    clear_symbolic_cache()
    rng = np.random.default_rng(3)
    dense = _random_spd(rng, 25, 0.15)
    a = factorize(SparseSym.from_matrix(dense))
    b = factorize(SparseSym.from_matrix(2.0 * dense))
    assert np.array_equal(a.perm, b.perm)
    assert b.logdet == pytest.approx(a.logdet + 25 * np.log(2.0))


def test_orderings_are_permutations() -> None:
    rng = np.random.default_rng(5)
    pattern = sp.csr_matrix(_random_spd(rng, 40, 0.1))
    for perm in (minimum_degree(pattern), fill_reducing_order(pattern)):
        assert np.array_equal(np.sort(perm), np.arange(40))
    assert np.array_equal(minimum_degree(pattern), minimum_degree(pattern))
