"""
融合模型模块

观测集合、超参数、线性高斯系统组装和模拟数据生成。
"""

from .hyperparams import Hyperparams, free_parameters, logit_to_rho, rho_to_logit
from .observations import ObservationSet
from .simulate import SimulatedData, domain_blocks, scenario_grid, simulate_field, simulate_scenario
from .system import INSITU_ROW, KINDS, SATELLITE_ROW, FusionModel, LinearGaussianSystem, assemble

__all__ = [
    "INSITU_ROW",
    "KINDS",
    "SATELLITE_ROW",
    "FusionModel",
    "Hyperparams",
    "LinearGaussianSystem",
    "ObservationSet",
    "SimulatedData",
    "assemble",
    "domain_blocks",
    "free_parameters",
    "logit_to_rho",
    "rho_to_logit",
    "scenario_grid",
    "simulate_field",
    "simulate_scenario",
]
