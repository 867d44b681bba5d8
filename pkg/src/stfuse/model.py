"""运行配置。所有配置段都是 pydantic 模型，未知字段一律拒绝。"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import List, Literal, Optional, Tuple

import yaml
from pydantic import BaseModel, ConfigDict, Field, model_validator

from stfuse.exceptions import ConfigError, ParseError

CONFIG_DIR = os.path.join(os.path.dirname(__file__), "config")
SCENARIOS_PATH = os.path.join(CONFIG_DIR, "scenarios.yaml")

ModelKind = Literal["fusion", "insitu", "satellite"]
MODEL_KINDS: Tuple[str, ...] = ("fusion", "insitu", "satellite")


class _Config(BaseModel):
    model_config = ConfigDict(extra="forbid")


# ==========================================
# 1. 网格与卫星像元 (Mesh / Grid)
# ==========================================

class MeshConfig(_Config):
    max_edge_inner: float = Field(0.05, gt=0, description="区域内格点间距上限")
    max_edge_outer: float = Field(0.2, gt=0, description="外扩带格点间距上限")
    outer_pad: float = Field(0.2, ge=0, description="外扩带宽度")

    @model_validator(mode="after")
    def _ordered(self):
        if self.max_edge_inner > self.max_edge_outer:
            raise ValueError("max_edge_inner must not exceed max_edge_outer")
        return self


class GridConfig(_Config):
    x0: float = Field(..., description="网格左下角 x")
    y0: float = Field(..., description="网格左下角 y")
    dx: float = Field(..., gt=0, description="像元宽度")
    dy: float = Field(..., gt=0, description="像元高度")
    nx: int = Field(..., ge=1, description="列数")
    ny: int = Field(..., ge=1, description="行数")


# ==========================================
# 2. 先验与优化器 (Priors / Optimizer)
# ==========================================

class PriorSpec(_Config):
    fixed_effect_sd: float = Field(100.0, gt=0, description="固定效应 β 与偏差 a 的正态先验标准差")
    log_tau_shape: float = Field(0.01, gt=0, description="观测精度的 logGamma 先验形状参数")
    log_tau_rate: float = Field(0.01, gt=0, description="观测精度的 logGamma 先验速率参数")
    rho_transform_var: float = Field(0.15, gt=0, description="log((1+ρ)/(1-ρ)) 正态先验的方差")
    theta_mean: float = Field(0.0, description="log τ_ω 与 log κ 正态先验的均值")
    theta_sd: float = Field(1.0, gt=0, description="log τ_ω 与 log κ 正态先验的标准差")


class OptimizerConfig(_Config):
    fatol: float = Field(1e-4, gt=0, description="单纯形内对数后验的收敛极差")
    xatol: float = Field(1e-3, gt=0, description="单纯形顶点的收敛距离")
    max_iter: int = Field(2000, ge=1, description="每次 Nelder-Mead 的最大迭代次数")
    max_restarts: int = Field(3, ge=0, description="未收敛时的最大重启次数")
    initial_step: float = Field(0.5, gt=0, description="初始单纯形在变换尺度上的边长")
    hessian_step: float = Field(1e-2, gt=0, description="有限差分 Hessian 的步长")
    grid_strategy: Literal["ccd", "mode"] = Field("ccd", description="ccd = 中心复合设计，mode = 只用众数点")
    axial_scale: float = Field(1.0, gt=0, description="CCD 轴向点距离众数的标准差倍数")


# ==========================================
# 3. 拟合 (Fit)
# ==========================================

class FitConfig(_Config):
    model: ModelKind = Field("fusion", description="模型类型")
    T: Optional[int] = Field(None, ge=1, description="潜变量时间长度，默认取观测中的最大天数")
    tie_noise_precisions: bool = Field(False, description="融合模型中约束 τ1 = τ2")
    n_samp: int = Field(100, ge=1, description="后验抽样数")


# ==========================================
# 4. 模拟与模拟研究 (Scenario / Study)
# ==========================================

class ScenarioConfig(_Config):
    scenario_id: Optional[int] = Field(None, ge=1, le=12, description="对应情景表中的编号")
    n_insitu: int = Field(30, ge=1, description="每天的原位观测站点数")
    missing_pct: float = Field(0.5, ge=0, lt=1, description="卫星像元每天的缺失比例")
    max_edge_inner: float = Field(0.05, gt=0, description="网格内部边长上限")
    max_edge_outer: float = Field(0.2, gt=0, description="网格外扩带边长上限")
    outer_pad: float = Field(0.2, ge=0, description="网格外扩宽度")
    block_size: float = Field(0.04, gt=0, description="卫星像元边长")
    T: int = Field(19, ge=1, description="模拟天数")
    train_days: int = Field(14, ge=1, description="训练天数，其余为预测天数")
    n_sim: int = Field(20, ge=1, description="重复次数")
    n_samp: int = Field(100, ge=1, description="每次拟合的后验抽样数")
    n_pred: int = Field(20, ge=1, description="每次重复的留出预测点数")
    kappa: float = Field(7.0, gt=0)
    sigma2_omega: float = Field(0.25, gt=0)
    rho: float = Field(0.7, gt=-1, lt=1)
    tau1: float = Field(50.0, gt=0, description="卫星观测噪声精度")
    tau2: float = Field(50.0, gt=0, description="原位观测噪声精度")
    a: float = Field(0.5, description="卫星偏差")
    beta: List[float] = Field(default_factory=lambda: [0.0, -1.0, -1.0], description="截距、经度、纬度系数")
    noise_free: bool = Field(False, description="关闭观测噪声")
    domain: Optional[List[Tuple[float, float]]] = Field(None, description="区域多边形，默认为内置的西伊利湖区域")
    seed: int = Field(0, description="随机种子")

    @model_validator(mode="after")
    def _check(self):
        if self.train_days >= self.T:
            raise ValueError(f"train_days ({self.train_days}) must be smaller than T ({self.T})")
        if len(self.beta) != 3:
            raise ValueError("beta must hold (intercept, x, y) coefficients")
        if self.max_edge_inner > self.max_edge_outer:
            raise ValueError("max_edge_inner must not exceed max_edge_outer")
        return self

    @property
    def mesh(self) -> MeshConfig:
        return MeshConfig(
            max_edge_inner=self.max_edge_inner, max_edge_outer=self.max_edge_outer, outer_pad=self.outer_pad
        )

    @classmethod
    def from_table(cls, scenario_id: int, **overrides) -> "ScenarioConfig":
        """按情景表第 ``scenario_id`` 行构造，其余字段取默认值或 ``overrides``。"""
        table = load_scenario_table()
        if scenario_id not in table:
            raise ConfigError(f"unknown scenario {scenario_id}; known: {sorted(table)}")
        fields = dict(table[scenario_id])
        fields.update(overrides)
        return cls(scenario_id=scenario_id, **fields)


class StudyConfig(_Config):
    scenarios: List[int] = Field(default_factory=lambda: [10, 11], description="要运行的情景编号")
    models: List[ModelKind] = Field(default_factory=lambda: list(MODEL_KINDS), description="要比较的模型")
    n_sim: Optional[int] = Field(None, ge=1, description="覆盖情景中的重复次数")
    max_failure_rate: float = Field(0.2, ge=0, le=1, description="单元格允许的失败比例")
    tie_noise_precisions: bool = Field(True, description="融合模型中约束 τ1 = τ2（模拟研究的设定）")
    overrides: dict = Field(default_factory=dict, description="对所有情景生效的字段覆盖")


# ==========================================
# 5. 输入输出 (IO)
# ==========================================

class IOConfig(_Config):
    out_dir: str = Field("output", description="输出目录")
    domain: Optional[str] = Field(None, description="区域多边形 CSV")
    grid: Optional[str] = Field(None, description="卫星像元网格 CSV")
    insitu: Optional[str] = Field(None, description="原位观测 CSV")
    satellite: Optional[str] = Field(None, description="卫星观测 CSV")
    targets: Optional[str] = Field(None, description="预测目标 CSV")
    truth: Optional[str] = Field(None, description="留出真值 CSV")
    fit: Optional[str] = Field(None, description="fit.json 路径")
    predictions: Optional[str] = Field(None, description="predictions.csv 路径")
    metrics: Optional[str] = Field(None, description="metrics.csv 路径（report 使用）")


# ==========================================
# 6. 顶层配置 (RunConfig)
# ==========================================

class RunConfig(_Config):
    mesh: MeshConfig = Field(default_factory=MeshConfig)
    grid: Optional[GridConfig] = None
    fit: FitConfig = Field(default_factory=FitConfig)
    priors: PriorSpec = Field(default_factory=PriorSpec)
    optimizer: OptimizerConfig = Field(default_factory=OptimizerConfig)
    scenario: ScenarioConfig = Field(default_factory=ScenarioConfig)
    study: StudyConfig = Field(default_factory=StudyConfig)
    io: IOConfig = Field(default_factory=IOConfig)
    seed: int = Field(0, description="全局随机种子")
    workers: Optional[int] = Field(None, ge=1, description="并行进程数，默认读 STFUSE_WORKERS 或 CPU 数")

    @classmethod
    def load(cls, path) -> "RunConfig":
        """读取 JSON 配置。语法错误报 ParseError（带行列号），字段错误报 pydantic ValidationError。"""
        text = Path(path).read_text(encoding="utf-8")
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(str(path), exc.lineno, exc.colno, exc.msg) from exc
        return cls.model_validate(data)

    def dump(self) -> str:
        return self.model_dump_json(indent=2)

    def resolved_workers(self) -> int:
        if self.workers is not None:
            return self.workers
        env = os.getenv("STFUSE_WORKERS")
        if env:
            try:
                return max(1, int(env))
            except ValueError as exc:
                raise ConfigError(f"STFUSE_WORKERS must be an integer, got {env!r}") from exc
        return os.cpu_count() or 1


def load_scenario_table(path: str = SCENARIOS_PATH) -> dict:
    """情景表：编号 -> 字段字典。"""
    with open(path, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    return {int(row.pop("id")): row for row in raw["scenarios"]}
