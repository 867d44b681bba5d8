#!/usr/bin/env python
"""stfuse 命令行入口。

子命令：mesh, simulate, fit, predict, study, report。
全局参数 ``--config`` ``--seed`` ``--workers`` ``--out`` 覆盖配置文件中的对应字段。
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from typing import List, Optional

import numpy as np
from dotenv import load_dotenv
from pydantic import ValidationError

from stfuse.exceptions import (
    ConfigError,
    DomainError,
    FitError,
    GeometryError,
    NumericalError,
    ParseError,
    StudyError,
)
from stfuse.fusion.simulate import simulate_scenario
from stfuse.fusion.system import FusionModel
from stfuse.geometry.blocks import BlockSet, GridSpec
from stfuse.geometry.mesh import Mesh, build_mesh
from stfuse.geometry.polygon import as_ring, default_domain, polygon_centroid
from stfuse.inference.fit import fit
from stfuse.inference.predict import LATENT, TargetSet, missing_cell_targets, predict
from stfuse.io import csv_io
from stfuse.io.fit_json import load_fit_json, restore_fit, write_fit_json
from stfuse.model import GridConfig, IOConfig, RunConfig, ScenarioConfig
from stfuse.simstudy.metrics import compute_pred_rmse
from stfuse.simstudy.study import run_study

logger = logging.getLogger("stfuse")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging() -> None:
    """读取 .env，按 STFUSE_LOG 设置日志级别（默认 info）。"""
    load_dotenv(override=False)
    name = os.getenv("STFUSE_LOG", "info").strip().lower()
    if name not in LOG_LEVELS:
        raise ConfigError(f"STFUSE_LOG must be one of {sorted(LOG_LEVELS)}, got {name!r}")
    logging.basicConfig(level=LOG_LEVELS[name], format=LOG_FORMAT)


def load_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    update = {}
    if args.seed is not None:
        update["seed"] = args.seed
    if args.workers is not None:
        if args.workers < 1:
            raise ConfigError(f"--workers must be >= 1, got {args.workers}")
        update["workers"] = args.workers
    if args.out is not None:
        update["io"] = cfg.io.model_copy(update={"out_dir": args.out})
    return cfg.model_copy(update=update)


def _out(cfg: RunConfig, name: str) -> str:
    return os.path.join(cfg.io.out_dir, name)


# ==========================================
# 数据装配
# ==========================================

def _domain(cfg: RunConfig) -> np.ndarray:
    if cfg.io.domain:
        return as_ring(csv_io.read_domain(cfg.io.domain))
    if cfg.scenario.domain is not None:
        return as_ring(cfg.scenario.domain)
    return default_domain()


def _mesh(cfg: RunConfig, domain: np.ndarray) -> Mesh:
    m = cfg.mesh
    return build_mesh(domain, m.max_edge_inner, m.outer_pad, m.max_edge_outer)


def _blocks(cfg: RunConfig) -> Optional[BlockSet]:
    """整张行优先网格。block_id 是完整网格中的编号，包围盒边角的像元也可以出现在 satellite.csv 里。"""
    if cfg.io.grid:
        grid = csv_io.read_grid(cfg.io.grid)
    elif cfg.grid is not None:
        grid = GridSpec(**cfg.grid.model_dump())
    else:
        return None
    return BlockSet.from_grid(grid)


def _model(cfg: RunConfig) -> FusionModel:
    if not (cfg.io.insitu or cfg.io.satellite):
        raise ConfigError("io.insitu or io.satellite must name an observation file")
    domain = _domain(cfg)
    mesh = _mesh(cfg, domain)
    blocks = _blocks(cfg)
    if cfg.io.satellite and blocks is None:
        raise ConfigError("satellite observations need a grid (io.grid or the grid section)")
    obs = csv_io.read_observations(
        cfg.io.insitu, cfg.io.satellite, polygon_centroid(domain), T=cfg.fit.T, blocks=blocks
    )
    return FusionModel(cfg.fit.model, obs, mesh, blocks, fixed_effect_sd=cfg.priors.fixed_effect_sd)


# ==========================================
# 子命令
# ==========================================

def cmd_mesh(cfg: RunConfig) -> None:
    mesh = _mesh(cfg, _domain(cfg))
    csv_io.write_mesh(cfg.io.out_dir, mesh)


def cmd_simulate(cfg: RunConfig) -> None:
    """写出训练期观测、留出真值、顶点真值场，以及指向这些文件的 config.json。"""
    scenario: ScenarioConfig = cfg.scenario.model_copy(update={"seed": cfg.seed})
    sim = simulate_scenario(scenario)
    obs = sim.obs.restrict_days(scenario.train_days)

    csv_io.write_domain(_out(cfg, "domain.csv"), sim.domain)
    csv_io.write_grid(_out(cfg, "grid.csv"), sim.grid)
    csv_io.write_insitu(_out(cfg, "insitu.csv"), obs)
    csv_io.write_satellite(_out(cfg, "satellite.csv"), obs)
    csv_io.write_truth(_out(cfg, "truth.csv"), sim.heldout_xy, sim.heldout_truth)
    csv_io.write_truth_field(_out(cfg, "truth_field.csv"), sim.vertex_truth)
    csv_io.write_mesh(cfg.io.out_dir, sim.mesh)

    g = sim.grid
    follow_up = cfg.model_copy(
        update={
            "mesh": scenario.mesh,
            "grid": GridConfig(x0=g.x0, y0=g.y0, dx=g.dx, dy=g.dy, nx=g.nx, ny=g.ny),
            "fit": cfg.fit.model_copy(update={"T": scenario.T}),
            "scenario": scenario,
            "io": IOConfig(
                out_dir=cfg.io.out_dir,
                domain=_out(cfg, "domain.csv"),
                grid=_out(cfg, "grid.csv"),
                insitu=_out(cfg, "insitu.csv"),
                satellite=_out(cfg, "satellite.csv"),
                truth=_out(cfg, "truth.csv"),
                fit=_out(cfg, "fit.json"),
                predictions=_out(cfg, "predictions.csv"),
                metrics=cfg.io.metrics,
            ),
        }
    )
    path = _out(cfg, "config.json")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(follow_up.dump() + "\n")
    logger.info("wrote %s", path)


def cmd_fit(cfg: RunConfig) -> None:
    model = _model(cfg)
    result = fit(model, cfg.priors, cfg.optimizer, tie_noise=cfg.fit.tie_noise_precisions)
    write_fit_json(cfg.io.fit or _out(cfg, "fit.json"), result)
    csv_io.write_mesh(cfg.io.out_dir, model.mesh)
    for name, s in result.summaries.items():
        logger.info("%-12s mean %.4f sd %.4f [%.4f, %.4f]", name, s.mean, s.sd, s.q025, s.q975)


def cmd_predict(cfg: RunConfig) -> None:
    """缺失像元-天、targets.csv 中的目标和 truth.csv 的留出点，外加顶点上的潜在场。"""
    model = _model(cfg)
    result = restore_fit(load_fit_json(cfg.io.fit or _out(cfg, "fit.json")), model, cfg.priors)

    parts: List[TargetSet] = []
    if model.blocks is not None:
        parts.append(missing_cell_targets(model, model.obs.last_observed_day(), observed_only=True))
    if cfg.io.targets:
        parts.append(csv_io.read_targets(cfg.io.targets, model.blocks))
    heldout = None
    if cfg.io.truth:
        ids, xy, truth = csv_io.read_truth(cfg.io.truth)
        heldout = (len(parts), truth)
        parts.append(TargetSet.points(xy, range(1, truth.shape[0] + 1), site_ids=ids, quantity=LATENT))

    if parts:
        targets = parts[0]
        for extra in parts[1:]:
            targets = targets.concat(extra)
        pred = predict(result, targets)
        csv_io.write_predictions(cfg.io.predictions or _out(cfg, "predictions.csv"), pred)
        if heldout is not None:
            k, truth = heldout
            start = sum(len(p) for p in parts[:k])
            mean = pred.mean[start:start + truth.size].reshape(truth.shape)
            rmse = compute_pred_rmse(mean, truth)
            csv_io.write_rows(_out(cfg, "heldout_rmse.csv"), ("day", "rmse"), enumerate(rmse, start=1))

    vertices = TargetSet.points(model.mesh.vertices, range(1, model.T + 1), quantity=LATENT)
    field = predict(result, vertices)
    shape = (model.T, model.G)
    csv_io.write_field(_out(cfg, "field.csv"), field.mean.reshape(shape), field.sd.reshape(shape))


def cmd_study(cfg: RunConfig) -> None:
    study = cfg.study
    scenarios = [ScenarioConfig.from_table(k, **study.overrides) for k in study.scenarios]
    result = run_study(
        scenarios,
        models=study.models,
        n_sim=study.n_sim,
        seed=cfg.seed,
        workers=cfg.resolved_workers(),
        priors=cfg.priors,
        optimizer=cfg.optimizer,
        tie_noise=study.tie_noise_precisions,
        max_failure_rate=study.max_failure_rate,
    )
    rows = [row for rec in result.records if not rec.failed for row in rec.long_rows()]
    csv_io.write_metrics(cfg.io.metrics or _out(cfg, "metrics.csv"), rows)
    csv_io.write_aggregate(_out(cfg, "aggregate.csv"), result.aggregate)
    for (scenario, model), n in sorted(result.failures().items()):
        logger.warning("scenario %d model %s: %d failed replication(s)", scenario, model, n)


def cmd_report(cfg: RunConfig) -> None:
    from stfuse.io import report

    out = cfg.io.out_dir
    produced = False
    field_path = _out(cfg, "field.csv")
    if os.path.exists(field_path):
        truth_field = _out(cfg, "truth_field.csv")
        report.render_field_report(out, field_path, out, truth_field if os.path.exists(truth_field) else None)
        produced = True
    metrics_path = cfg.io.metrics or _out(cfg, "metrics.csv")
    if os.path.exists(metrics_path):
        report.render_metrics_report(metrics_path, out, cfg.scenario.train_days)
        produced = True
    if not produced:
        raise FileNotFoundError(f"nothing to report in {out}: need field.csv or metrics.csv")


COMMANDS = {
    "mesh": cmd_mesh,
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "predict": cmd_predict,
    "study": cmd_study,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stfuse", description="原位与卫星数据的时空 SPDE 融合")
    parser.add_argument("command", choices=sorted(COMMANDS), help="子命令")
    parser.add_argument("--config", default=None, help="RunConfig JSON 文件")
    parser.add_argument("--seed", type=int, default=None, help="随机种子")
    parser.add_argument("--workers", type=int, default=None, help="并行进程数")
    parser.add_argument("--out", default=None, help="输出目录")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """执行一个子命令并返回退出码。"""
    args = build_parser().parse_args(argv)
    try:
        configure_logging()
        cfg = load_config(args)
        COMMANDS[args.command](cfg)
    except (ConfigError, DomainError, GeometryError, ValidationError) as exc:
        logger.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except (NumericalError, FitError, StudyError) as exc:
        logger.error("numerical error: %s", exc)
        return EXIT_NUMERICAL
    except (ParseError, OSError) as exc:
        logger.error("input/output error: %s", exc)
        return EXIT_IO
    return EXIT_OK


def run():
    """控制台入口 ``stfuse``。"""
    sys.exit(main())


if __name__ == "__main__":
    run()
