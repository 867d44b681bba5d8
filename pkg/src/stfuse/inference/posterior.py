"""从拟合结果抽取后验样本：先按权重选网格点，再从该点的潜变量条件分布抽样。"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from stfuse.exceptions import ConfigError
from stfuse.gmrf.sampling import sample_gmrf
from stfuse.inference.fit import DERIVED, FitResult


@dataclass(eq=False)
class PosteriorSamples:
    """``params`` 为参数名 -> (n,) 数组；``field`` 为 (n, G·T) 的 ξ 样本（可选）。"""

    params: Dict[str, np.ndarray]
    grid_index: np.ndarray
    field: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return int(len(self.grid_index))


def sample_posterior(fit: FitResult, n_samp: int, seed=None, include_field: bool = False) -> PosteriorSamples:
    """抽取 ``n_samp`` 个联合样本，给定 seed 时结果确定。"""
    if n_samp < 1:
        raise ConfigError(f"n_samp must be >= 1, got {n_samp}")
    rng = np.random.default_rng(seed)
    w = fit.weights
    choice = rng.choice(len(w), size=n_samp, p=w / w.sum())

    model = fit.model
    n_field = model.G * model.T
    latent = np.empty((n_samp, model.H.shape[1]))
    for k in np.unique(choice):
        rows = np.flatnonzero(choice == k)
        latent[rows] = sample_gmrf(fit.points[k].conditional, len(rows), rng=rng)

    params: Dict[str, np.ndarray] = {}
    for j, name in enumerate(model.fixed_names):
        params[name] = latent[:, n_field + j].copy()
    for name in fit.hyper_names():
        values = np.array(
            [getattr(p.theta, name) if name in DERIVED else p.theta.value(name) for p in fit.points]
        )
        params[name] = values[choice]
    return PosteriorSamples(
        params=params,
        grid_index=choice,
        field=latent[:, :n_field].copy() if include_field else None,
    )
