"""超参数 Θ = (τ_ω, κ, ρ, τ1, τ2) 及其优化用的变换尺度。

变换：θ1 = log τ_ω，θ2 = log κ，log((1+ρ)/(1-ρ))，log τ1，log τ2。
τ1 只在有卫星行时出现，τ2 只在有原位行时出现；约束 τ1 = τ2 时两者合为 ``tau_y``。
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from stfuse.exceptions import ConfigError
from stfuse.spde.matern import marginal_variance, practical_range

TIED = "tau_y"

# 自然尺度名称 -> 变换尺度名称
TRANSFORMED_NAMES: Dict[str, str] = {
    "tau_omega": "theta1",
    "kappa": "theta2",
    "rho": "rho_logit",
    "tau1": "log_tau1",
    "tau2": "log_tau2",
    TIED: "log_tau_y",
}


def rho_to_logit(rho: float) -> float:
    return math.log((1.0 + rho) / (1.0 - rho))


def logit_to_rho(z: float) -> float:
    return math.tanh(0.5 * z)


def free_parameters(kind: str, tie_noise: bool = False) -> List[str]:
    """模型 ``kind`` 需要估计的超参数（自然尺度名称）。"""
    base = ["tau_omega", "kappa", "rho"]
    if kind == "fusion":
        return base + ([TIED] if tie_noise else ["tau1", "tau2"])
    if kind == "insitu":
        return base + ["tau2"]
    if kind == "satellite":
        return base + ["tau1"]
    raise ConfigError(f"unknown model kind {kind!r}")


@dataclass(frozen=True)
class Hyperparams:
    tau_omega: float
    kappa: float
    rho: float
    tau1: Optional[float] = None
    tau2: Optional[float] = None

    def __post_init__(self) -> None:
        if not (self.tau_omega > 0 and self.kappa > 0):
            raise ConfigError(f"tau_omega and kappa must be positive (got {self.tau_omega}, {self.kappa})")
        if not abs(self.rho) < 1.0:
            raise ConfigError(f"|rho| must be < 1, got {self.rho}")
        for name in ("tau1", "tau2"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ConfigError(f"{name} must be positive, got {value}")

    @property
    def sigma2_omega(self) -> float:
        return float(marginal_variance(self.kappa, self.tau_omega))

    @property
    def range(self) -> float:
        return float(practical_range(self.kappa))

    def value(self, name: str) -> float:
        if name == TIED:
            return float(self.tau1 if self.tau1 is not None else self.tau2)
        return float(getattr(self, name))

    def to_vector(self, names: Sequence[str]) -> np.ndarray:
        """变换尺度上的向量。"""
        out = np.empty(len(names))
        for i, name in enumerate(names):
            v = self.value(name)
            out[i] = rho_to_logit(v) if name == "rho" else math.log(v)
        return out

    @classmethod
    def from_vector(cls, names: Sequence[str], vec: Sequence[float]) -> "Hyperparams":
        kw: Dict[str, float] = {}
        for name, v in zip(names, vec):
            v = float(v)
            if name == "rho":
                kw["rho"] = logit_to_rho(v)
            elif name == TIED:
                kw["tau1"] = kw["tau2"] = math.exp(v)
            else:
                kw[name] = math.exp(v)
        return cls(**kw)

    def natural(self, names: Sequence[str]) -> Dict[str, float]:
        return {name: self.value(name) for name in names}

    def with_noise(self, tau1: Optional[float] = None, tau2: Optional[float] = None) -> "Hyperparams":
        return replace(self, tau1=tau1, tau2=tau2)

    def as_tuple(self) -> Tuple[float, float, float, Optional[float], Optional[float]]:
        return (self.tau_omega, self.kappa, self.rho, self.tau1, self.tau2)
