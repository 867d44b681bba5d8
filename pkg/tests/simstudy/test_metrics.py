"""Bias, RMSE and per-day prediction RMSE."""

from __future__ import annotations

import math
import sys
from pathlib import Path

import numpy as np
import pytest

# 添加 src 目录到路径
project_root = Path(__file__).resolve().parent.parent.parent
src_path = project_root / "src"
if str(src_path) not in sys.path:
    sys.path.insert(0, str(src_path))

from stfuse.exceptions import ConfigError
from stfuse.simstudy import compute_param_metrics, compute_pred_rmse


def test_param_metrics() -> None:
    bias, rmse = compute_param_metrics([0.4, 0.6, 0.8], 0.5)
    assert bias == pytest.approx(0.1)
    assert rmse == pytest.approx(math.sqrt((0.01 + 0.01 + 0.09) / 3))
    assert compute_param_metrics([2.0], 2.0) == (0.0, 0.0)
    with pytest.raises(ConfigError):
        compute_param_metrics([], 1.0)


def test_pred_rmse_per_day() -> None:
    truth = np.zeros((2, 3))
    pred = np.array([[1.0, 1.0, 1.0], [0.0, 3.0, 0.0]])
    assert np.allclose(compute_pred_rmse(pred, truth), [1.0, math.sqrt(3.0)])
    assert np.allclose(compute_pred_rmse([1.0, -1.0], [0.0, 0.0]), [1.0])


def test_pred_rmse_shape_mismatch() -> None:
    with pytest.raises(ConfigError):
        compute_pred_rmse(np.zeros((2, 3)), np.zeros((3, 2)))
    with pytest.raises(ConfigError):
        compute_pred_rmse(np.zeros((2, 0)), np.zeros((2, 0)))
