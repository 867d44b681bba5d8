"""
模拟研究模块

情景 x 模型 x 重复的比较研究，以及偏差 / RMSE 指标。
"""

from .metrics import compute_param_metrics, compute_pred_rmse
from .study import MetricsRecord, StudyResult, aggregate, run_replication, run_study

__all__ = [
    "MetricsRecord",
    "StudyResult",
    "aggregate",
    "compute_param_metrics",
    "compute_pred_rmse",
    "run_replication",
    "run_study",
]
