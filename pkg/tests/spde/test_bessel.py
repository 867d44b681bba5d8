"""Bessel K0/K1 against scipy.special."""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
from scipy.special import k0 as scipy_k0
from scipy.special import k1 as scipy_k1

# 添加 src 目录到路径
project_root = Path(__file__).resolve().parent.parent.parent
src_path = project_root / "src"
if str(src_path) not in sys.path:
    sys.path.insert(0, str(src_path))

from stfuse.spde.bessel import CROSSOVER, k0, k0_k1, k1


def test_k1_matches_scipy() -> None:
    x = np.logspace(-6, np.log10(30.0), 500)
    assert np.allclose(k1(x), scipy_k1(x), rtol=1e-9, atol=0.0)


def test_k0_matches_scipy() -> None:
    x = np.logspace(-6, np.log10(30.0), 500)
    assert np.allclose(k0(x), scipy_k0(x), rtol=1e-9, atol=0.0)


def test_continuous_at_crossover() -> None:
    below = np.nextafter(CROSSOVER, 0.0)
    above = np.nextafter(CROSSOVER, 10.0)
    a0, a1 = k0_k1(np.array([below]))
    b0, b1 = k0_k1(np.array([above]))
    assert abs(a0[0] - b0[0]) < 1e-10
    assert abs(a1[0] - b1[0]) < 1e-10


def test_nonpositive_argument() -> None:
    out0, out1 = k0_k1(np.array([0.0, -1.0]))
    assert np.all(np.isinf(out0)) and np.all(np.isinf(out1))
    assert k1(np.array(2.5)).shape == ()
