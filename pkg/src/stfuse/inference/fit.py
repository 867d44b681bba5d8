"""超参数后验探索：Nelder-Mead 找众数，中心复合设计（CCD）布点，按后验密度加权。"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
import scipy.optimize as so
import scipy.sparse as sp
from scipy.special import logsumexp

from stfuse.exceptions import FitError, NumericalError
from stfuse.fusion.hyperparams import TIED, Hyperparams, free_parameters
from stfuse.fusion.system import INSITU_ROW, SATELLITE_ROW, FusionModel
from stfuse.gmrf.sampling import GaussianConditional
from stfuse.inference.engine import latent_posterior, log_marginal_likelihood
from stfuse.inference.priors import log_prior
from stfuse.inference.summary import ParamSummary, discrete_summary, mixture_summary
from stfuse.model import OptimizerConfig, PriorSpec

logger = logging.getLogger(__name__)

# 目标函数在分解失败时返回的惩罚值
FAILED_OBJECTIVE = 1e300
# Hessian 特征值下限（相对最大特征值）
_EIG_FLOOR = 1e-8
DERIVED = ("sigma2_omega", "range")


@dataclass(eq=False)
class GridPoint:
    theta: Hyperparams
    x: np.ndarray
    log_post: float
    weight: float
    conditional: GaussianConditional


@dataclass(eq=False)
class FitResult:
    """超参数网格点、各点的潜变量条件分布以及边缘摘要。"""

    model: FusionModel
    names: List[str]
    points: List[GridPoint]
    mode_index: int
    trace: List[Dict] = field(default_factory=list)
    converged: bool = True
    restarts: int = 0
    summaries: Dict[str, ParamSummary] = field(default_factory=dict)

    @property
    def kind(self) -> str:
        return self.model.kind

    @property
    def mode(self) -> GridPoint:
        return self.points[self.mode_index]

    @property
    def weights(self) -> np.ndarray:
        return np.array([p.weight for p in self.points])

    @property
    def fixed_names(self) -> List[str]:
        return list(self.model.fixed_names)

    def hyper_names(self) -> List[str]:
        """摘要里报告的超参数名（自然尺度，含派生量）。"""
        return list(self.names) + list(DERIVED)


class _Objective:
    """负对数后验 -(log p(z|Θ) + log p(Θ))，记录每次求值。"""

    def __init__(self, model: FusionModel, names: Sequence[str], priors: PriorSpec):
        self.model = model
        self.names = list(names)
        self.priors = priors
        self.trace: List[Dict] = []

    def log_posterior(self, x: np.ndarray) -> float:
        theta = Hyperparams.from_vector(self.names, x)
        return log_marginal_likelihood(theta, self.model) + log_prior(self.names, x, self.priors)

    def __call__(self, x: np.ndarray) -> float:
        try:
            value = -self.log_posterior(x)
        except (NumericalError, OverflowError, ValueError) as exc:
            logger.debug("objective failed at %s: %s", np.array2string(x, precision=4), exc)
            value = FAILED_OBJECTIVE
        if not np.isfinite(value):
            value = FAILED_OBJECTIVE
        self.trace.append({"x": [float(v) for v in x], "neg_log_post": float(value)})
        logger.debug("objective %s -> %.6f", np.array2string(x, precision=4), value)
        return value


def initial_point(model: FusionModel, names: Sequence[str], priors: PriorSpec) -> np.ndarray:
    """θ1、θ2 和 ρ 变换取先验中位数；噪声精度取 log(2 / var(z))（按行组）。"""

    def start_log_tau(group: Optional[int]) -> float:
        z = model.z if group is None else model.z[model.row_group == group]
        var = float(np.var(z)) if len(z) > 1 else 1.0
        return float(np.log(2.0 / max(var, 1e-8)))

    x0 = []
    for name in names:
        if name in ("tau_omega", "kappa"):
            x0.append(priors.theta_mean)
        elif name == "rho":
            x0.append(0.0)
        elif name == "tau1":
            x0.append(start_log_tau(SATELLITE_ROW))
        elif name == "tau2":
            x0.append(start_log_tau(INSITU_ROW))
        elif name == TIED:
            x0.append(start_log_tau(None))
    return np.asarray(x0, dtype=float)


def _simplex(x0: np.ndarray, step: float) -> np.ndarray:
    d = len(x0)
    simplex = np.tile(x0, (d + 1, 1))
    simplex[1:] += step * np.eye(d)
    return simplex


def find_mode(objective: _Objective, x0: np.ndarray, opt: OptimizerConfig):
    """Nelder-Mead，未收敛时从当前最优点重启，最多 ``max_restarts`` 次。"""
    x = np.asarray(x0, dtype=float)
    best = objective(x)
    for attempt in range(opt.max_restarts + 1):
        res = so.minimize(
            objective,
            x,
            method="Nelder-Mead",
            options={
                "fatol": opt.fatol,
                "xatol": opt.xatol,
                "maxiter": opt.max_iter,
                "maxfev": 4 * opt.max_iter,
                "initial_simplex": _simplex(x, opt.initial_step),
            },
        )
        if res.fun <= best:
            x, best = np.asarray(res.x, dtype=float), float(res.fun)
        if res.success and res.fun < FAILED_OBJECTIVE:
            logger.info("optimizer converged after %d evaluations (log posterior %.4f)", len(objective.trace), -res.fun)
            return x, attempt
        logger.warning("optimizer did not converge (attempt %d): %s", attempt + 1, res.message)
    raise FitError(
        f"Nelder-Mead did not converge after {opt.max_restarts} restarts", trace=objective.trace
    )


class _StencilFailure(Exception):
    def __init__(self, point: np.ndarray):
        super().__init__(np.array2string(point, precision=4))
        self.point = point


def _central_hessian(f, x: np.ndarray, h: float) -> np.ndarray:
    def g(p):
        value = f(p)
        if not np.isfinite(value) or value >= FAILED_OBJECTIVE:
            raise _StencilFailure(p)
        return value

    d = len(x)
    H = np.zeros((d, d))
    f0 = g(x)
    E = np.eye(d) * h
    for i in range(d):
        H[i, i] = (g(x + E[i]) - 2.0 * f0 + g(x - E[i])) / (h * h)
        for j in range(i + 1, d):
            fpp = g(x + E[i] + E[j])
            fpm = g(x + E[i] - E[j])
            fmp = g(x - E[i] + E[j])
            fmm = g(x - E[i] - E[j])
            H[i, j] = H[j, i] = (fpp - fpm - fmp + fmm) / (4.0 * h * h)
    return H


def finite_difference_hessian(f, x: np.ndarray, h: float, max_halvings: int = 4) -> np.ndarray:
    """中心差分 Hessian。

    模板中任一点的目标值非有限或等于失败罚值时步长减半重算，
    ``max_halvings`` 次后仍失败则报错。

    Raises:
        NumericalError: 每个步长下都有模板点求值失败
    """
    x = np.asarray(x, dtype=float)
    step = h
    for attempt in range(max_halvings + 1):
        step = h / 2.0**attempt
        try:
            return _central_hessian(f, x, step)
        except _StencilFailure as exc:
            failure = exc
            logger.warning("objective failed at %s with Hessian step %.3g; halving the step", exc, step)
    raise NumericalError(f"objective failed at {failure} for every Hessian step down to {step:.3g}")


def ccd_design(mode: np.ndarray, hessian: np.ndarray, scale: float = 1.0) -> np.ndarray:
    """众数加上沿协方差特征方向 ±scale 个标准差的 2d 个轴向点。"""
    sym = 0.5 * (hessian + hessian.T)
    eigval, eigvec = np.linalg.eigh(sym)
    floor = _EIG_FLOOR * max(float(np.abs(eigval).max()), 1.0)
    if np.any(eigval <= floor):
        logger.warning("Hessian at the mode is not positive definite; clipping %d eigenvalue(s)", int(np.sum(eigval <= floor)))
        eigval = np.where(eigval <= floor, np.maximum(np.abs(eigval), floor), eigval)
    sd = 1.0 / np.sqrt(eigval)
    points = [mode]
    for k in range(len(mode)):
        step = scale * sd[k] * eigvec[:, k]
        points.append(mode + step)
        points.append(mode - step)
    return np.array(points)


def build_fit_result(
    model: FusionModel,
    names: Sequence[str],
    xs: np.ndarray,
    priors: PriorSpec,
    trace: Optional[List[Dict]] = None,
    restarts: int = 0,
) -> FitResult:
    """在给定的变换尺度网格点上计算条件分布、权重和摘要。"""
    names = list(names)
    entries = []
    for x in np.atleast_2d(xs):
        theta = Hyperparams.from_vector(names, x)
        cond = latent_posterior(model, theta)
        lml = log_marginal_likelihood(theta, model, posterior=cond)
        entries.append((theta, np.asarray(x, dtype=float), lml + log_prior(names, x, priors), cond))

    log_posts = np.array([e[2] for e in entries])
    weights = np.exp(log_posts - logsumexp(log_posts))
    weights /= weights.sum()
    points = [
        GridPoint(theta=th, x=x, log_post=float(lp), weight=float(w), conditional=c)
        for (th, x, lp, c), w in zip(entries, weights)
    ]
    result = FitResult(
        model=model,
        names=names,
        points=points,
        mode_index=int(np.argmax(log_posts)),
        trace=list(trace or []),
        restarts=restarts,
    )
    result.summaries = summarize(result)
    return result


def summarize(result: FitResult) -> Dict[str, ParamSummary]:
    """固定效应用高斯混合，超参数用离散加权分布。"""
    w = result.weights
    model = result.model
    n_field = model.G * model.T
    out: Dict[str, ParamSummary] = {}

    idx = [n_field + i for i in range(len(model.fixed_names))]
    means = np.array([p.conditional.mean[idx] for p in result.points])
    variances = np.array([_marginal_variances(p.conditional, idx) for p in result.points])
    for j, name in enumerate(model.fixed_names):
        out[name] = mixture_summary(w, means[:, j], variances[:, j])

    for name in result.hyper_names():
        values = [getattr(p.theta, name) if name in DERIVED else p.theta.value(name) for p in result.points]
        out[name] = discrete_summary(w, values)
    return out


def _marginal_variances(cond: GaussianConditional, idx: Sequence[int]) -> np.ndarray:
    rows = sp.csr_matrix((np.ones(len(idx)), (np.arange(len(idx)), idx)), shape=(len(idx), cond.dim))
    return cond.linear_variance(rows)


def fit(
    model: FusionModel,
    priors: Optional[PriorSpec] = None,
    opt: Optional[OptimizerConfig] = None,
    tie_noise: bool = False,
) -> FitResult:
    """拟合 ``model`` 的超参数后验。

    ``opt.grid_strategy == "mode"`` 时网格只有众数一点（经验贝叶斯代入）。

    Raises:
        FitError: 重启后 Nelder-Mead 仍未收敛
    """
    priors = priors or PriorSpec()
    opt = opt or OptimizerConfig()
    names = free_parameters(model.kind, tie_noise)
    objective = _Objective(model, names, priors)
    x0 = initial_point(model, names, priors)
    mode, restarts = find_mode(objective, x0, opt)

    if opt.grid_strategy == "mode":
        xs = mode[None, :]
    else:
        hess = finite_difference_hessian(objective, mode, opt.hessian_step)
        xs = ccd_design(mode, hess, opt.axial_scale)
    logger.info("%s model: %d hyperparameter grid point(s)", model.kind, len(xs))
    return build_fit_result(model, names, xs, priors, trace=objective.trace, restarts=restarts)
