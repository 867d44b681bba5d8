"""后验摘要：高斯混合与离散加权分布的均值、标准差和分位数。"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import norm

QUANTILE_TOL = 1e-6
LOWER_Q = 0.025
UPPER_Q = 0.975
# 方差为 0 的分量按极窄的正态处理
_SD_FLOOR = 1e-300


@dataclass(frozen=True)
class ParamSummary:
    mean: float
    sd: float
    q025: float
    q975: float

    def as_dict(self) -> dict:
        return asdict(self)


def mixture_cdf(x: float, weights, means, sds) -> float:
    sds = np.maximum(np.asarray(sds, dtype=float), _SD_FLOOR)
    return float(np.sum(np.asarray(weights) * norm.cdf((x - np.asarray(means)) / sds)))


def mixture_quantile(q: float, weights, means, sds, tol: float = QUANTILE_TOL) -> float:
    """高斯混合分布的 q 分位数，二分到区间宽度 < tol。"""
    means = np.asarray(means, dtype=float)
    sds = np.asarray(sds, dtype=float)
    span = 10.0 * max(float(sds.max()), tol)
    lo = float(means.min()) - span
    hi = float(means.max()) + span
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mixture_cdf(mid, weights, means, sds) < q:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def mixture_summary(weights, means, variances) -> ParamSummary:
    w = np.asarray(weights, dtype=float)
    mu = np.asarray(means, dtype=float)
    var = np.maximum(np.asarray(variances, dtype=float), 0.0)
    mean = float(np.sum(w * mu))
    total_var = float(np.sum(w * (var + mu * mu)) - mean * mean)
    sds = np.sqrt(var)
    return ParamSummary(
        mean=mean,
        sd=float(np.sqrt(max(total_var, 0.0))),
        q025=mixture_quantile(LOWER_Q, w, mu, sds),
        q975=mixture_quantile(UPPER_Q, w, mu, sds),
    )


def weighted_quantile(q: float, weights, values) -> float:
    """离散分布的 q 分位数：累计权重首次达到 q 的取值。"""
    v = np.asarray(values, dtype=float)
    order = np.argsort(v, kind="stable")
    cum = np.cumsum(np.asarray(weights, dtype=float)[order])
    k = int(np.searchsorted(cum, q - 1e-12))
    return float(v[order][min(k, len(v) - 1)])


def discrete_summary(weights, values) -> ParamSummary:
    w = np.asarray(weights, dtype=float)
    v = np.asarray(values, dtype=float)
    mean = float(np.sum(w * v))
    var = float(np.sum(w * (v - mean) ** 2))
    return ParamSummary(
        mean=mean,
        sd=float(np.sqrt(var)),
        q025=weighted_quantile(LOWER_Q, w, v),
        q975=weighted_quantile(UPPER_Q, w, v),
    )
