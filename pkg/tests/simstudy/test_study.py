"""Simulation study driver."""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

# 添加 src 目录到路径
project_root = Path(__file__).resolve().parent.parent.parent
src_path = project_root / "src"
if str(src_path) not in sys.path:
    sys.path.insert(0, str(src_path))

from stfuse.exceptions import ConfigError, StudyError
from stfuse.model import MODEL_KINDS, OptimizerConfig, ScenarioConfig
from stfuse.simstudy import MetricsRecord, aggregate, run_study
from stfuse.simstudy import study as study_module
from stfuse.simstudy.study import PRED_RMSE, SECONDS

TINY = ScenarioConfig(
    scenario_id=1,
    domain=[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)],
    max_edge_inner=0.25,
    max_edge_outer=0.25,
    outer_pad=0.25,
    block_size=0.25,
    T=3,
    train_days=2,
    n_insitu=6,
    n_pred=4,
    n_samp=20,
)
FAST = OptimizerConfig(grid_strategy="mode")


def test_long_rows() -> None:
    rec = MetricsRecord(scenario=2, model="insitu", replication=0, bias={"rho": 0.1}, rmse={"rho": 0.2})
    rec.pred_rmse = np.array([0.5, 0.7])
    rec.seconds = 1.5
    rows = rec.long_rows()
    assert rows == [
        (2, "insitu", 0, "bias", "rho", 0.1),
        (2, "insitu", 0, "rmse", "rho", 0.2),
        (2, "insitu", 0, PRED_RMSE, "1", 0.5),
        (2, "insitu", 0, PRED_RMSE, "2", 0.7),
        (2, "insitu", 0, SECONDS, "", 1.5),
    ]
    assert rec.key == (2, MODEL_KINDS.index("insitu"), 0)


def test_aggregate_skips_failures() -> None:
    ok = [
        MetricsRecord(scenario=1, model="fusion", replication=j, bias={"a": b}, rmse={"a": abs(b)})
        for j, b in enumerate([0.1, 0.3])
    ]
    bad = MetricsRecord(scenario=1, model="fusion", replication=2, failed=True)
    rows = aggregate(ok + [bad])
    bias = [r for r in rows if r[2] == "bias"]
    assert bias == [(1, "fusion", "bias", "a", pytest.approx(0.2), 2)]


def test_run_study_serial() -> None:
    result = run_study([TINY], models=("fusion", "insitu"), n_sim=2, seed=7, optimizer=FAST, progress=False)
    assert [(r.model, r.replication) for r in result.records] == [
        ("fusion", 0),
        ("fusion", 1),
        ("insitu", 0),
        ("insitu", 1),
    ]
    for rec in result.records:
        assert not rec.failed
        assert rec.pred_rmse.shape == (TINY.T,)
        assert "rho" in rec.bias
    fusion = result.records[0]
    assert "a" in fusion.bias and "tau_y" in fusion.bias
    assert "a" not in result.records[2].bias
    cells = {(r[0], r[1]) for r in result.aggregate}
    assert cells == {(1, "fusion"), (1, "insitu")}


def test_study_is_reproducible() -> None:
    a = run_study([TINY], models=("satellite",), n_sim=1, seed=3, optimizer=FAST, progress=False)
    b = run_study([TINY], models=("satellite",), n_sim=1, seed=3, optimizer=FAST, progress=False)
    assert a.records[0].bias == b.records[0].bias
    assert np.array_equal(a.records[0].pred_rmse, b.records[0].pred_rmse)


def test_failure_rate_guard() -> None:
    broken = OptimizerConfig(grid_strategy="mode", max_iter=1, max_restarts=0)
    with pytest.raises(StudyError):
        run_study([TINY], models=("insitu",), n_sim=1, seed=0, optimizer=broken, progress=False)


def test_parallel_study_matches_serial() -> None:
    kwargs = dict(models=("fusion", "insitu"), n_sim=3, seed=11, optimizer=FAST, progress=False)
    serial = run_study([TINY], workers=1, **kwargs)
    parallel = run_study([TINY], workers=2, **kwargs)
    assert [r.key for r in parallel.records] == [r.key for r in serial.records]
    for a, b in zip(serial.records, parallel.records):
        assert a.failed == b.failed
        assert a.bias == b.bias
        assert a.rmse == b.rmse
        assert np.array_equal(a.pred_rmse, b.pred_rmse)
    assert parallel.aggregate == serial.aggregate


def test_numerical_errors_become_failed_replications(monkeypatch) -> None:
    real_fit = study_module.fit

    def flaky_fit(model, *args, **kwargs):
        if model.kind == "insitu":
            raise np.linalg.LinAlgError("matrix is singular")
        return real_fit(model, *args, **kwargs)

    monkeypatch.setattr(study_module, "fit", flaky_fit)
    result = run_study(
        [TINY], models=("fusion", "insitu"), n_sim=1, seed=2, optimizer=FAST, max_failure_rate=1.0, progress=False
    )
    by_model = {r.model: r for r in result.records}
    assert not by_model["fusion"].failed
    assert by_model["insitu"].failed
    assert "singular" in by_model["insitu"].error
    assert result.failures() == {(1, "insitu"): 1}
    assert {r[1] for r in result.aggregate} == {"fusion"}


def test_config_errors_stop_the_study(monkeypatch) -> None:
    def bad_fit(model, *args, **kwargs):
        raise ConfigError("tau2 is required when in situ rows are present")

    monkeypatch.setattr(study_module, "fit", bad_fit)
    with pytest.raises(ConfigError):
        run_study([TINY], models=("insitu",), n_sim=1, seed=0, optimizer=FAST, progress=False)
