"""fit.json：拟合结果的持久化格式。

文件保存网格点（变换尺度坐标、对数后验、权重）和参数摘要表。读回时在同一份
数据上按这些网格点重新计算条件分布，因此不需要保存潜变量的均值和精度。
"""

from __future__ import annotations

import json
import logging
import os
from typing import Any, Dict

import numpy as np

from stfuse.exceptions import ConfigError, ParseError
from stfuse.fusion.hyperparams import TIED
from stfuse.fusion.system import FusionModel
from stfuse.inference.fit import FitResult, build_fit_result
from stfuse.io.schema_validator import load_fit_schema, validate_fit_document
from stfuse.model import PriorSpec

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1


def fit_to_dict(result: FitResult) -> Dict[str, Any]:
    """参数行顺序：固定效应，超参数，派生量。"""
    rows = []
    for name in result.fixed_names + result.hyper_names():
        s = result.summaries[name]
        rows.append({"name": name, **s.as_dict()})
    return {
        "schema_version": SCHEMA_VERSION,
        "model": result.kind,
        "T": int(result.model.T),
        "tie_noise_precisions": TIED in result.names,
        "hyperparameters": list(result.names),
        "fixed_effects": result.fixed_names,
        "converged": bool(result.converged),
        "restarts": int(result.restarts),
        "n_evaluations": len(result.trace),
        "mode_index": int(result.mode_index),
        "grid": [
            {
                "x": [float(v) for v in p.x],
                "theta": {n: float(v) for n, v in p.theta.natural(result.names).items()},
                "log_posterior": float(p.log_post),
                "weight": float(p.weight),
            }
            for p in result.points
        ],
        "parameters": rows,
    }


def write_fit_json(path: str, result: FitResult) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(fit_to_dict(result), fh, indent=2)
        fh.write("\n")
    logger.info("wrote %s", path)


def load_fit_json(path: str) -> Dict[str, Any]:
    """读取并按 Schema 校验 fit.json。"""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(path, exc.lineno, exc.colno, exc.msg) from exc
    validate_fit_document(data, load_fit_schema(), path)
    return data


def restore_fit(data: Dict[str, Any], model: FusionModel, priors: PriorSpec) -> FitResult:
    """在 ``model`` 上按保存的网格点重建 FitResult。

    Raises:
        ConfigError: 模型类型、时间长度或固定效应与文件不一致
    """
    if data["model"] != model.kind:
        raise ConfigError(f"fit.json holds a {data['model']} model, the data build a {model.kind} model")
    if data["T"] != model.T:
        raise ConfigError(f"fit.json was fitted with T={data['T']}, the data give T={model.T}")
    if list(data["fixed_effects"]) != list(model.fixed_names):
        raise ConfigError(f"fixed effects {data['fixed_effects']} differ from the model's {model.fixed_names}")
    names = list(data["hyperparameters"])
    xs = np.array([g["x"] for g in data["grid"]], dtype=float)
    if xs.shape[1] != len(names):
        raise ConfigError("grid point dimension does not match the hyperparameter list")
    result = build_fit_result(model, names, xs, priors, restarts=int(data.get("restarts", 0)))
    result.converged = bool(data.get("converged", True))
    return result
