"""模拟研究：每个 (情景, 重复) 模拟一次数据，在同一份数据上拟合各模型并计算指标。"""

from __future__ import annotations

import logging
import time
from collections import defaultdict
from dataclasses import dataclass, field
from multiprocessing import Pool
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from stfuse.exceptions import ConfigError, DomainError, FitError, NumericalError, StudyError
from stfuse.fusion.simulate import simulate_scenario
from stfuse.fusion.system import FusionModel
from stfuse.inference.fit import fit
from stfuse.inference.posterior import sample_posterior
from stfuse.inference.predict import TargetSet, predict
from stfuse.model import MODEL_KINDS, OptimizerConfig, PriorSpec, ScenarioConfig
from stfuse.simstudy.metrics import compute_param_metrics, compute_pred_rmse

logger = logging.getLogger(__name__)

PRED_RMSE = "pred_rmse"
SECONDS = "seconds"

# 记为失败重复而不中断研究的异常；配置错误照常抛出
REPLICATION_FAILURES = (FitError, NumericalError, ValueError, ArithmeticError, np.linalg.LinAlgError)


@dataclass(eq=False)
class MetricsRecord:
    scenario: int
    model: str
    replication: int
    bias: Dict[str, float] = field(default_factory=dict)
    rmse: Dict[str, float] = field(default_factory=dict)
    pred_rmse: np.ndarray = field(default_factory=lambda: np.zeros(0))
    seconds: float = 0.0
    failed: bool = False
    error: str = ""

    @property
    def key(self) -> Tuple[int, int, int]:
        return (self.scenario, MODEL_KINDS.index(self.model), self.replication)

    def long_rows(self) -> List[Tuple[int, str, int, str, str, float]]:
        """(scenario, model, replication, metric, parameter-or-day, value)。"""
        rows = []
        head = (self.scenario, self.model, self.replication)
        for name in sorted(self.bias):
            rows.append(head + ("bias", name, self.bias[name]))
            rows.append(head + ("rmse", name, self.rmse[name]))
        for day, value in enumerate(self.pred_rmse, start=1):
            rows.append(head + (PRED_RMSE, str(day), float(value)))
        rows.append(head + (SECONDS, "", self.seconds))
        return rows


@dataclass(eq=False)
class StudyResult:
    records: List[MetricsRecord]
    aggregate: List[Tuple[int, str, str, str, float, int]]

    def failures(self) -> Dict[Tuple[int, str], int]:
        out: Dict[Tuple[int, str], int] = defaultdict(int)
        for r in self.records:
            if r.failed:
                out[(r.scenario, r.model)] += 1
        return dict(out)


@dataclass(frozen=True)
class _Job:
    scenario: ScenarioConfig
    replication: int
    models: Tuple[str, ...]
    priors: PriorSpec
    optimizer: OptimizerConfig
    tie_noise: bool


def run_replication(job: _Job) -> List[MetricsRecord]:
    """一次重复：所有模型共用同一份模拟数据和同一组留出点。"""
    cfg = job.scenario
    sid = cfg.scenario_id or 0
    sim = simulate_scenario(cfg)
    train = sim.obs.restrict_days(cfg.train_days)
    truth = sim.true_values
    targets = TargetSet.points(sim.heldout_xy, range(1, cfg.T + 1))
    records = []
    for kind in job.models:
        start = time.perf_counter()
        rec = MetricsRecord(scenario=sid, model=kind, replication=job.replication)
        try:
            model = FusionModel(kind, train, sim.mesh, sim.blocks, fixed_effect_sd=job.priors.fixed_effect_sd)
            result = fit(model, job.priors, job.optimizer, tie_noise=job.tie_noise and kind == "fusion")
            samples = sample_posterior(result, cfg.n_samp, seed=cfg.seed)
            for name, values in samples.params.items():
                if name in truth:
                    rec.bias[name], rec.rmse[name] = compute_param_metrics(values, truth[name])
            pred = predict(result, targets)
            rec.pred_rmse = compute_pred_rmse(pred.mean.reshape(cfg.T, -1), sim.heldout_truth)
        except (ConfigError, DomainError):
            raise
        except REPLICATION_FAILURES as exc:
            rec.failed = True
            rec.error = str(exc)
            logger.warning("scenario %d replication %d model %s failed: %s", sid, job.replication, kind, exc)
        rec.seconds = time.perf_counter() - start
        records.append(rec)
    logger.info("scenario %d replication %d done", sid, job.replication)
    return records


def aggregate(records: Sequence[MetricsRecord]) -> List[Tuple[int, str, str, str, float, int]]:
    """对成功的重复取算术平均：(scenario, model, metric, parameter-or-day, mean, n)。"""
    groups: Dict[Tuple[int, str, str, str], List[float]] = defaultdict(list)
    for rec in records:
        if rec.failed:
            continue
        for scenario, model, _, metric, key, value in rec.long_rows():
            groups[(scenario, model, metric, key)].append(value)

    def order(k):
        scenario, model, metric, key = k
        day = int(key) if metric == PRED_RMSE else 0
        return (scenario, MODEL_KINDS.index(model), metric, day, key)

    return [k + (float(np.mean(groups[k])), len(groups[k])) for k in sorted(groups, key=order)]


def run_study(
    scenarios: Sequence[ScenarioConfig],
    models: Sequence[str] = MODEL_KINDS,
    n_sim: Optional[int] = None,
    seed: int = 0,
    workers: int = 1,
    priors: Optional[PriorSpec] = None,
    optimizer: Optional[OptimizerConfig] = None,
    tie_noise: bool = True,
    max_failure_rate: float = 0.2,
    progress: bool = True,
) -> StudyResult:
    """运行模拟研究。第 j 次重复的种子为 ``seed + j``，结果与进程数无关。

    Raises:
        StudyError: 某个 (情景, 模型) 单元的失败比例超过 ``max_failure_rate``
    """
    priors = priors or PriorSpec()
    optimizer = optimizer or OptimizerConfig()
    jobs = []
    for cfg in scenarios:
        reps = n_sim if n_sim is not None else cfg.n_sim
        for j in range(reps):
            jobs.append(
                _Job(
                    scenario=cfg.model_copy(update={"seed": seed + j}),
                    replication=j,
                    models=tuple(models),
                    priors=priors,
                    optimizer=optimizer,
                    tie_noise=tie_noise,
                )
            )
    logger.info("study: %d replication(s) over %d scenario(s), %d worker(s)", len(jobs), len(scenarios), workers)

    records: List[MetricsRecord] = []
    bar = tqdm(total=len(jobs), desc="replications", disable=not progress)
    if workers > 1 and len(jobs) > 1:
        with Pool(workers) as pool:
            for recs in pool.imap_unordered(run_replication, jobs, chunksize=1):
                records.extend(recs)
                bar.update(1)
    else:
        for job in jobs:
            records.extend(run_replication(job))
            bar.update(1)
    bar.close()
    records.sort(key=lambda r: r.key)

    result = StudyResult(records=records, aggregate=aggregate(records))
    totals: Dict[Tuple[int, str], int] = defaultdict(int)
    for r in records:
        totals[(r.scenario, r.model)] += 1
    for cell, failed in result.failures().items():
        if failed / totals[cell] > max_failure_rate:
            raise StudyError(
                f"scenario {cell[0]} model {cell[1]}: {failed} of {totals[cell]} replications failed"
            )
    return result
