"""参数估计的偏差 / RMSE 与逐日预测 RMSE。"""

from __future__ import annotations

from typing import Tuple

import numpy as np

from stfuse.exceptions import ConfigError


def compute_param_metrics(samples, truth: float) -> Tuple[float, float]:
    """bias = mean(samples) - truth，rmse = sqrt(mean((samples - truth)²))。"""
    s = np.asarray(samples, dtype=float).ravel()
    if s.size == 0:
        raise ConfigError("at least one posterior sample is required")
    err = s - float(truth)
    return float(err.mean()), float(np.sqrt(np.mean(err * err)))


def compute_pred_rmse(pred, truth) -> np.ndarray:
    """逐日 RMSE。``pred`` 与 ``truth`` 形状为 (T, n_pred)，返回长度 T 的数组。"""
    p = np.asarray(pred, dtype=float)
    y = np.asarray(truth, dtype=float)
    if p.shape != y.shape:
        raise ConfigError(f"prediction shape {p.shape} does not match truth shape {y.shape}")
    if p.ndim == 1:
        p, y = p[None, :], y[None, :]
    if p.shape[1] == 0:
        raise ConfigError("no prediction locations")
    return np.sqrt(np.mean((p - y) ** 2, axis=1))
