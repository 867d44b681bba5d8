"""
桌面规模的模拟研究验收脚本

在情景 10（每天 30 个站点、50% 缺失）和情景 11（5 个站点、80% 缺失）上运行
三个模型的比较研究，输出：
  - 融合模型参数的重复平均后验均值，以及是否落在恢复区间内
  - 每个模型训练期（第 1-14 天）和预测期（第 15-19 天）的平均预测 RMSE
  - metrics.csv / aggregate.csv / acceptance.json

示例：
  python scripts/run_acceptance_study.py --n-sim 20 --workers 4
  python scripts/run_acceptance_study.py --scenarios 10 --n-sim 2   # 快速检查
"""
import argparse
import json
import logging
import sys
import time
from collections import defaultdict
from pathlib import Path

from dotenv import load_dotenv

PROJECT_ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(PROJECT_ROOT / "src"))

from stfuse.io import csv_io  # noqa: E402
from stfuse.model import MODEL_KINDS, OptimizerConfig, PriorSpec, ScenarioConfig  # noqa: E402
from stfuse.simstudy.study import PRED_RMSE, run_study  # noqa: E402

load_dotenv()

EVAL_OUTPUT_DIR = PROJECT_ROOT / "evaluation_results"

# 参数恢复区间：真值 ± 容许偏差
RECOVERY_BANDS = {"a": (0.5, 0.1), "rho": (0.7, 0.1), "beta1": (-1.0, 0.3), "beta2": (-1.0, 0.3)}

logger = logging.getLogger("run_acceptance_study")


def recovery_check(records) -> dict:
    """融合模型各参数后验均值（= 偏差 + 真值）在重复上的平均。"""
    values = defaultdict(list)
    for rec in records:
        if rec.failed or rec.model != "fusion":
            continue
        for name, (truth, _) in RECOVERY_BANDS.items():
            if name in rec.bias:
                values[(rec.scenario, name)].append(rec.bias[name] + truth)
    out = {}
    for (scenario, name), vals in sorted(values.items()):
        truth, tol = RECOVERY_BANDS[name]
        mean = sum(vals) / len(vals)
        out[f"{scenario}/{name}"] = {"mean": mean, "truth": truth, "ok": abs(mean - truth) <= tol}
    return out


def rmse_check(aggregate, train_days: int) -> dict:
    """训练期与预测期的平均预测 RMSE，以及融合模型是否不劣于单源模型。"""
    per = defaultdict(lambda: {"train": [], "test": []})
    for scenario, model, metric, key, mean, _ in aggregate:
        if metric != PRED_RMSE:
            continue
        part = "train" if int(key) <= train_days else "test"
        per[(scenario, model)][part].append(mean)
    summary = {}
    for (scenario, model), parts in sorted(per.items()):
        train = sum(parts["train"]) / len(parts["train"])
        test = sum(parts["test"]) / len(parts["test"]) if parts["test"] else float("nan")
        summary.setdefault(str(scenario), {})[model] = {"train": train, "test": test, "degrades": test > train}
    for scenario, models in summary.items():
        if "fusion" in models:
            best_other = min((v["train"] for k, v in models.items() if k != "fusion"), default=float("inf"))
            models["fusion"]["best_on_train"] = models["fusion"]["train"] <= best_other
    return summary


def main():
    parser = argparse.ArgumentParser(description="桌面规模模拟研究验收")
    parser.add_argument("--scenarios", type=int, nargs="+", default=[10, 11], help="情景编号")
    parser.add_argument("--n-sim", type=int, default=20, help="每个情景的重复次数")
    parser.add_argument("--seed", type=int, default=2024, help="基础随机种子")
    parser.add_argument("--workers", type=int, default=1, help="并行进程数")
    parser.add_argument("--grid-strategy", choices=["ccd", "mode"], default="ccd", help="超参数积分网格")
    parser.add_argument("--output-dir", type=str, default=str(EVAL_OUTPUT_DIR), help="输出目录")
    args = parser.parse_args()

    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    scenarios = [ScenarioConfig.from_table(k, n_sim=args.n_sim) for k in args.scenarios]
    start = time.perf_counter()
    result = run_study(
        scenarios,
        models=MODEL_KINDS,
        seed=args.seed,
        workers=args.workers,
        priors=PriorSpec(),
        optimizer=OptimizerConfig(grid_strategy=args.grid_strategy),
    )
    elapsed = time.perf_counter() - start

    rows = [row for rec in result.records if not rec.failed for row in rec.long_rows()]
    csv_io.write_metrics(str(out_dir / "metrics.csv"), rows)
    csv_io.write_aggregate(str(out_dir / "aggregate.csv"), result.aggregate)

    report = {
        "scenarios": args.scenarios,
        "n_sim": args.n_sim,
        "seconds": elapsed,
        "failures": {f"{s}/{m}": n for (s, m), n in result.failures().items()},
        "recovery": recovery_check(result.records),
        "prediction_rmse": rmse_check(result.aggregate, scenarios[0].train_days),
    }
    with open(out_dir / "acceptance.json", "w", encoding="utf-8") as f:
        json.dump(report, f, indent=2)

    logger.info("study finished in %.1f s", elapsed)
    for key, item in report["recovery"].items():
        logger.info("recovery %-12s mean %.4f (truth %.2f) %s", key, item["mean"], item["truth"], "ok" if item["ok"] else "MISS")
    for scenario, models in report["prediction_rmse"].items():
        for model, item in models.items():
            logger.info(
                "scenario %s %-9s train RMSE %.4f test RMSE %.4f", scenario, model, item["train"], item["test"]
            )
    logger.info("results written to %s", out_dir)


if __name__ == "__main__":
    main()
