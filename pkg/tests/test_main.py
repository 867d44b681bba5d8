"""End-to-end command-line runs: simulate -> fit -> predict -> report, plus exit codes."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import pytest

# 添加 src 目录到路径
project_root = Path(__file__).resolve().parent.parent
src_path = project_root / "src"
if str(src_path) not in sys.path:
    sys.path.insert(0, str(src_path))

from stfuse.io import csv_io
from stfuse.main import EXIT_CONFIG, EXIT_IO, EXIT_NUMERICAL, EXIT_OK, main

SQUARE = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]
SMALL_SCENARIO = {
    "domain": SQUARE,
    "max_edge_inner": 0.25,
    "max_edge_outer": 0.25,
    "outer_pad": 0.25,
    "block_size": 0.25,
    "T": 4,
    "train_days": 3,
    "n_insitu": 6,
    "n_pred": 4,
    "n_samp": 20,
}


def _config(tmp_path: Path, **sections) -> str:
    data = {
        "scenario": dict(SMALL_SCENARIO),
        "optimizer": {"grid_strategy": "mode"},
        "seed": 5,
    }
    data.update(sections)
    path = tmp_path / "run.json"
    path.write_text(json.dumps(data), encoding="utf-8")
    return str(path)


def _pipeline(tmp_path: Path, out: Path) -> Path:
    cfg = _config(tmp_path)
    assert main(["simulate", "--config", cfg, "--out", str(out)]) == EXIT_OK
    follow_up = str(out / "config.json")
    assert main(["fit", "--config", follow_up]) == EXIT_OK
    assert main(["predict", "--config", follow_up]) == EXIT_OK
    assert main(["report", "--config", follow_up]) == EXIT_OK
    return out


def test_pipeline_outputs(tmp_path: Path) -> None:
    out = _pipeline(tmp_path, tmp_path / "run")
    for name in (
        "insitu.csv",
        "satellite.csv",
        "truth.csv",
        "fit.json",
        "predictions.csv",
        "heldout_rmse.csv",
        "field.csv",
        "field_mean.svg",
        "field_sd.svg",
        "truth_field.svg",
    ):
        assert (out / name).exists(), name

    _, rows = csv_io.read_rows(str(out / "insitu.csv"), csv_io.INSITU_COLUMNS, {"t": int})
    assert max(r[3] for r in rows) == SMALL_SCENARIO["train_days"]
    mean, _ = csv_io.read_field(str(out / "field.csv"))
    assert mean.shape[0] == SMALL_SCENARIO["T"]
    svg = (out / "field_mean.svg").read_text(encoding="utf-8")
    assert svg.count("day ") == SMALL_SCENARIO["T"]


def test_pipeline_is_byte_identical(tmp_path: Path) -> None:
    a = _pipeline(tmp_path, tmp_path / "a")
    b = _pipeline(tmp_path, tmp_path / "b")
    for name in ("insitu.csv", "satellite.csv", "fit.json", "predictions.csv", "field.csv", "field_mean.svg"):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_fit_accepts_grid_cells_outside_the_domain(tmp_path: Path) -> None:
    triangle = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]
    scenario = dict(SMALL_SCENARIO, domain=triangle)
    out = tmp_path / "edge"
    assert main(["simulate", "--config", _config(tmp_path, scenario=scenario), "--out", str(out)]) == EXIT_OK

    # 4 x 4 网格的右上角像元，质心 (0.875, 0.875) 在三角形外
    corner = 15
    _, sat_rows = csv_io.read_rows(
        str(out / "satellite.csv"), csv_io.SATELLITE_COLUMNS, {"block_id": int, "t": int}
    )
    assert corner not in {r[0] for r in sat_rows}
    with open(out / "satellite.csv", "a", encoding="utf-8", newline="") as fh:
        fh.write(f"{corner},1,0.5\n")

    follow_up = str(out / "config.json")
    assert main(["fit", "--config", follow_up]) == EXIT_OK
    assert main(["predict", "--config", follow_up]) == EXIT_OK
    targets, _ = csv_io.read_predictions(str(out / "predictions.csv"))
    corner_days = sorted(
        int(t) for k, b, t in zip(targets.kind, targets.source_id, targets.t) if k == "block" and b == corner
    )
    assert corner_days == list(range(2, SMALL_SCENARIO["train_days"] + 1))
    # 从未观测的像元不作为缺失像元预测
    block_ids = {int(b) for k, b in zip(targets.kind, targets.source_id) if k == "block"}
    assert block_ids <= {r[0] for r in sat_rows} | {corner}


def test_study_and_metrics_report(tmp_path: Path) -> None:
    study = {
        "scenarios": [9],
        "models": ["fusion", "insitu"],
        "n_sim": 1,
        "overrides": {k: v for k, v in SMALL_SCENARIO.items() if k != "n_insitu"},
    }
    cfg = _config(tmp_path, study=study)
    out = tmp_path / "study"
    assert main(["study", "--config", cfg, "--workers", "1", "--out", str(out)]) == EXIT_OK
    assert main(["report", "--config", cfg, "--out", str(out)]) == EXIT_OK
    rows = csv_io.read_metrics(str(out / "metrics.csv"))
    assert {r[1] for r in rows} == {"fusion", "insitu"}
    assert (out / "aggregate.csv").exists()
    assert (out / "rmse_by_day.svg").exists()
    lines = (out / "rmse_by_day.csv").read_text(encoding="utf-8").splitlines()
    assert len(lines) == 1 + 2 * SMALL_SCENARIO["T"]


def test_exit_codes(tmp_path: Path, monkeypatch) -> None:
    bad_field = tmp_path / "bad.json"
    bad_field.write_text(json.dumps({"scenario": {"n_insitu": 0}}), encoding="utf-8")
    assert main(["mesh", "--config", str(bad_field), "--out", str(tmp_path)]) == EXIT_CONFIG

    broken = tmp_path / "broken.json"
    broken.write_text("{\n  \"seed\": ,\n}", encoding="utf-8")
    assert main(["mesh", "--config", str(broken)]) == EXIT_IO
    assert main(["mesh", "--config", str(tmp_path / "missing.json")]) == EXIT_IO

    no_data = _config(tmp_path)
    assert main(["fit", "--config", no_data, "--out", str(tmp_path / "x")]) == EXIT_CONFIG
    assert main(["report", "--config", no_data, "--out", str(tmp_path / "empty")]) == EXIT_IO

    monkeypatch.setenv("STFUSE_LOG", "verbose")
    assert main(["mesh", "--out", str(tmp_path / "y")]) == EXIT_CONFIG


def test_optimizer_failure_exit_code(tmp_path: Path) -> None:
    out = tmp_path / "sim"
    assert main(["simulate", "--config", _config(tmp_path), "--out", str(out)]) == EXIT_OK
    data = json.loads((out / "config.json").read_text(encoding="utf-8"))
    data["optimizer"].update(max_iter=1, max_restarts=0)
    failing = tmp_path / "failing.json"
    failing.write_text(json.dumps(data), encoding="utf-8")
    assert main(["fit", "--config", str(failing)]) == EXIT_NUMERICAL


def test_unknown_command() -> None:
    with pytest.raises(SystemExit):
        main(["kriging"])
