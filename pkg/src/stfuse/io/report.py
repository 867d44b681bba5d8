"""静态报告：逐天的潜在场热图（网格三角形填色）和按天的预测 RMSE 折线图。

SVG 输出是确定的：固定 hashsalt，去掉日期元数据，文字按 ``<text>`` 输出。
"""

from __future__ import annotations

import logging
import math
import os
from collections import defaultdict
from typing import Dict, List, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.tri import Triangulation  # noqa: E402

from stfuse.io import csv_io  # noqa: E402
from stfuse.model import MODEL_KINDS  # noqa: E402
from stfuse.simstudy.study import PRED_RMSE  # noqa: E402

logger = logging.getLogger(__name__)

_RC = {
    "svg.hashsalt": "stfuse",
    "svg.fonttype": "none",
    "path.simplify": False,
}
PANEL_COLUMNS = 5
RMSE_BY_DAY_COLUMNS = ("scenario", "model", "day", "rmse", "n")


def _save(fig, path: str) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with plt.rc_context(_RC):
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    logger.info("wrote %s", path)
    return path


def pooled_limits(*arrays: np.ndarray) -> Tuple[float, float]:
    """所有面板共用的线性色标范围。"""
    lo = min(float(np.min(a)) for a in arrays)
    hi = max(float(np.max(a)) for a in arrays)
    if hi <= lo:
        hi = lo + 1.0
    return lo, hi


def field_panels(
    vertices: np.ndarray,
    triangles: np.ndarray,
    values: np.ndarray,
    path: str,
    title: str,
    label: str,
    limits: Optional[Tuple[float, float]] = None,
) -> int:
    """每天一个面板的热图，返回面板数。``values`` 为 (T, G)。"""
    T = values.shape[0]
    ncols = min(PANEL_COLUMNS, T)
    nrows = int(math.ceil(T / ncols))
    vmin, vmax = limits if limits is not None else pooled_limits(values)
    tri = Triangulation(vertices[:, 0], vertices[:, 1], triangles)

    with plt.rc_context(_RC):
        fig, axes = plt.subplots(nrows, ncols, figsize=(2.4 * ncols, 2.2 * nrows + 0.6), squeeze=False)
        im = None
        for k, ax in enumerate(axes.ravel()):
            if k >= T:
                ax.set_axis_off()
                continue
            im = ax.tripcolor(tri, values[k], shading="gouraud", cmap="viridis", vmin=vmin, vmax=vmax)
            ax.set_title(f"day {k + 1}", fontsize=8)
            ax.set_aspect("equal")
            ax.set_xticks([])
            ax.set_yticks([])
        fig.suptitle(title)
        cbar = fig.colorbar(im, ax=axes.ravel().tolist(), shrink=0.8)
        cbar.set_label(label)
    _save(fig, path)
    return T


def render_field_report(
    mesh_dir: str,
    field_path: str,
    out_dir: str,
    truth_field_path: Optional[str] = None,
) -> Dict[str, int]:
    """后验均值、后验标准差（和真值）热图，返回 文件名 -> 面板数。

    均值图和真值图共用色标。
    """
    vertices, triangles, _ = csv_io.read_mesh_arrays(mesh_dir)
    mean, sd = csv_io.read_field(field_path)
    truth = csv_io.read_truth_field(truth_field_path) if truth_field_path else None
    limits = pooled_limits(mean, truth) if truth is not None else pooled_limits(mean)

    panels = {
        "field_mean.svg": field_panels(
            vertices, triangles, mean, os.path.join(out_dir, "field_mean.svg"), "Posterior mean", "mean", limits
        ),
        "field_sd.svg": field_panels(
            vertices, triangles, sd, os.path.join(out_dir, "field_sd.svg"), "Posterior standard deviation", "sd"
        ),
    }
    if truth is not None:
        panels["truth_field.svg"] = field_panels(
            vertices, triangles, truth, os.path.join(out_dir, "truth_field.svg"), "Simulated truth", "value", limits
        )
    return panels


def rmse_by_day(metrics: Sequence[Tuple]) -> List[Tuple[int, str, int, float, int]]:
    """从长格式指标表按 (情景, 模型, 天) 平均预测 RMSE。"""
    groups: Dict[Tuple[int, str, int], List[float]] = defaultdict(list)
    for scenario, model, _, metric, key, value in metrics:
        if metric == PRED_RMSE:
            groups[(scenario, model, int(key))].append(float(value))
    keys = sorted(groups, key=lambda k: (k[0], MODEL_KINDS.index(k[1]), k[2]))
    return [k + (float(np.mean(groups[k])), len(groups[k])) for k in keys]


def rmse_chart(rows: Sequence[Tuple[int, str, int, float, int]], path: str, train_days: int) -> int:
    """每个情景一个子图，每个模型一条线，预测天加阴影。返回子图数。"""
    scenarios = sorted({r[0] for r in rows})
    with plt.rc_context(_RC):
        fig, axes = plt.subplots(1, max(1, len(scenarios)), figsize=(4.0 * max(1, len(scenarios)), 3.2), squeeze=False)
        for ax, scenario in zip(axes[0], scenarios):
            last = 0
            for model in MODEL_KINDS:
                pts = [(r[2], r[3]) for r in rows if r[0] == scenario and r[1] == model]
                if not pts:
                    continue
                days, values = zip(*pts)
                last = max(last, max(days))
                ax.plot(days, values, marker="o", ms=3, label=model)
            if last > train_days:
                ax.axvspan(train_days + 0.5, last + 0.5, color="0.9", zorder=0)
            ax.set_title(f"scenario {scenario}")
            ax.set_xlabel("day")
            ax.set_ylabel("prediction RMSE")
            ax.legend(fontsize=7)
        fig.tight_layout()
    _save(fig, path)
    return len(scenarios)


def render_metrics_report(metrics_path: str, out_dir: str, train_days: int) -> List[Tuple[int, str, int, float, int]]:
    """写出 rmse_by_day.csv 和 rmse_by_day.svg。"""
    rows = rmse_by_day(csv_io.read_metrics(metrics_path))
    csv_io.write_rows(os.path.join(out_dir, "rmse_by_day.csv"), RMSE_BY_DAY_COLUMNS, rows)
    rmse_chart(rows, os.path.join(out_dir, "rmse_by_day.svg"), train_days)
    return rows
