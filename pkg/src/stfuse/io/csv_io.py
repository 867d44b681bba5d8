"""CSV 文件格式的读写。

所有浮点数按 17 位有效数字写出，读回后与写入值完全相等。缺失的卫星像元-天
不写行。读取错误统一抛出 ParseError，消息中带文件、行号和列号（均从 1 开始）。
"""

from __future__ import annotations

import csv
import logging
import os
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from stfuse.exceptions import ConfigError, ParseError
from stfuse.fusion.observations import ObservationSet
from stfuse.geometry.blocks import BlockSet, GridSpec
from stfuse.geometry.mesh import Mesh
from stfuse.geometry.polygon import as_ring
from stfuse.inference.predict import Predictions, TargetSet

logger = logging.getLogger(__name__)

INSITU_COLUMNS = ("site_id", "x", "y", "t", "value")
SATELLITE_COLUMNS = ("block_id", "t", "value")
GRID_COLUMNS = ("x0", "y0", "dx", "dy", "nx", "ny")
DOMAIN_COLUMNS = ("x", "y")
TARGET_COLUMNS = ("kind", "id", "x", "y", "t", "quantity")
TRUTH_COLUMNS = ("site_id", "x", "y", "t", "value")
PREDICTION_COLUMNS = TARGET_COLUMNS + ("mean", "sd", "q025", "q975")
FIELD_COLUMNS = ("t", "vertex", "mean", "sd")
TRUTH_FIELD_COLUMNS = ("t", "vertex", "value")
VERTEX_COLUMNS = ("vertex", "x", "y", "inner")
TRIANGLE_COLUMNS = ("triangle", "v0", "v1", "v2")
METRICS_COLUMNS = ("scenario", "model", "replication", "metric", "key", "value")
AGGREGATE_COLUMNS = ("scenario", "model", "metric", "key", "mean", "n")


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_rows(path: str, header: Sequence[str], rows: Iterable[Sequence]) -> int:
    """写出表头和数据行，返回行数。换行固定为 ``\\n``，输出与平台无关。"""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    n = 0
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
            n += 1
    logger.info("wrote %s (%d rows)", path, n)
    return n


def _parse_int(text: str) -> int:
    return int(text)


def _parse_float(text: str) -> float:
    value = float(text)
    if not np.isfinite(value):
        raise ValueError(f"non-finite number {text!r}")
    return value


def _parse_bool(text: str) -> bool:
    if text not in ("0", "1"):
        raise ValueError(f"expected 0 or 1, got {text!r}")
    return text == "1"


def read_rows(
    path: str,
    required: Sequence[str],
    parsers: Dict[str, Callable[[str], object]],
    allow_extra: bool = False,
) -> Tuple[List[str], List[List]]:
    """读取带表头的 CSV。

    Args:
        path: 文件路径
        required: 表头开头必须依次出现的列
        parsers: 列名 -> 解析函数；额外列一律按浮点数解析
        allow_extra: 是否允许 ``required`` 之后的额外列

    Returns:
        (表头, 解析后的行)
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(path, 1, 1, "file is empty") from None
        header = [h.strip() for h in header]
        for k, name in enumerate(required):
            if k >= len(header) or header[k] != name:
                found = header[k] if k < len(header) else "<missing>"
                raise ParseError(path, 1, k + 1, f"expected column {name!r}, found {found!r}")
        if len(header) > len(required) and not allow_extra:
            raise ParseError(path, 1, len(required) + 1, f"unexpected column {header[len(required)]!r}")
        if len(set(header)) != len(header):
            raise ParseError(path, 1, 1, "duplicate column names")

        funcs = [parsers.get(name, _parse_float) for name in header]
        rows = []
        for row in reader:
            line = reader.line_num
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                col = min(len(row), len(header)) + 1
                raise ParseError(path, line, col, f"expected {len(header)} fields, found {len(row)}")
            parsed = []
            for col, (cell, func) in enumerate(zip(row, funcs), start=1):
                try:
                    parsed.append(func(cell.strip()))
                except ValueError as exc:
                    raise ParseError(path, line, col, f"column {header[col - 1]!r}: {exc}") from None
            rows.append(parsed)
    return header, rows


def _column(rows: List[List], k: int, dtype) -> np.ndarray:
    return np.array([r[k] for r in rows], dtype=dtype)


# ==========================================
# 区域与网格
# ==========================================

def write_domain(path: str, domain) -> None:
    write_rows(path, DOMAIN_COLUMNS, as_ring(domain).tolist())


def read_domain(path: str) -> np.ndarray:
    _, rows = read_rows(path, DOMAIN_COLUMNS, {})
    if len(rows) < 3:
        raise ParseError(path, len(rows) + 2, 1, "a domain polygon needs at least 3 vertices")
    return np.array(rows, dtype=float)


def write_grid(path: str, grid: GridSpec) -> None:
    write_rows(path, GRID_COLUMNS, [(grid.x0, grid.y0, grid.dx, grid.dy, grid.nx, grid.ny)])


def read_grid(path: str) -> GridSpec:
    _, rows = read_rows(path, GRID_COLUMNS, {"nx": _parse_int, "ny": _parse_int})
    if len(rows) != 1:
        raise ParseError(path, 2, 1, f"grid file must hold exactly one row, found {len(rows)}")
    return GridSpec(*rows[0])


def write_mesh(directory: str, mesh: Mesh) -> None:
    write_rows(
        os.path.join(directory, "mesh_vertices.csv"),
        VERTEX_COLUMNS,
        ((i, v[0], v[1], bool(z)) for i, (v, z) in enumerate(zip(mesh.vertices, mesh.zone))),
    )
    write_rows(
        os.path.join(directory, "mesh_triangles.csv"),
        TRIANGLE_COLUMNS,
        ((k, *tri) for k, tri in enumerate(mesh.triangles.tolist())),
    )


def read_mesh_arrays(directory: str) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(vertices, triangles, zone)，供作图使用。"""
    vpath = os.path.join(directory, "mesh_vertices.csv")
    tpath = os.path.join(directory, "mesh_triangles.csv")
    _, vrows = read_rows(vpath, VERTEX_COLUMNS, {"vertex": _parse_int, "inner": _parse_bool})
    _, trows = read_rows(tpath, TRIANGLE_COLUMNS, {c: _parse_int for c in TRIANGLE_COLUMNS})
    vertices = np.array([[r[1], r[2]] for r in vrows], dtype=float).reshape(-1, 2)
    zone = _column(vrows, 3, bool)
    triangles = np.array([r[1:] for r in trows], dtype=np.int64).reshape(-1, 3)
    if len(triangles) and (triangles.min() < 0 or triangles.max() >= len(vertices)):
        raise ParseError(tpath, 2, 2, "triangle refers to a vertex that does not exist")
    return vertices, triangles, zone


# ==========================================
# 观测
# ==========================================

def write_insitu(path: str, obs: ObservationSet) -> None:
    header = INSITU_COLUMNS + tuple(obs.extra_names)
    rows = (
        (s, xy[0], xy[1], t, v, *extra)
        for s, xy, t, v, extra in zip(
            obs.insitu_site, obs.insitu_xy, obs.insitu_t, obs.insitu_value, obs.insitu_extra
        )
    )
    write_rows(path, header, rows)


def write_satellite(path: str, obs: ObservationSet) -> None:
    header = SATELLITE_COLUMNS + tuple(obs.extra_names)
    rows = ((b, t, v, *extra) for b, t, v, extra in zip(obs.sat_block, obs.sat_t, obs.sat_value, obs.sat_extra))
    write_rows(path, header, rows)


def read_observations(
    insitu_path: Optional[str],
    satellite_path: Optional[str],
    origin,
    T: Optional[int] = None,
    blocks: Optional[BlockSet] = None,
) -> ObservationSet:
    """读取原位和卫星观测（任一可省略）。两个文件的额外协变量列必须一致。

    ``T`` 缺省时取观测中的最大天数。
    """
    int_cols = {"site_id": _parse_int, "t": _parse_int, "block_id": _parse_int}
    ins_header, ins_rows = (list(INSITU_COLUMNS), [])
    sat_header, sat_rows = (list(SATELLITE_COLUMNS), [])
    if insitu_path:
        ins_header, ins_rows = read_rows(insitu_path, INSITU_COLUMNS, int_cols, allow_extra=True)
    if satellite_path:
        sat_header, sat_rows = read_rows(satellite_path, SATELLITE_COLUMNS, int_cols, allow_extra=True)
    ins_extra = ins_header[len(INSITU_COLUMNS):]
    sat_extra = sat_header[len(SATELLITE_COLUMNS):]
    if insitu_path and satellite_path and ins_extra != sat_extra:
        raise ParseError(
            satellite_path, 1, len(SATELLITE_COLUMNS) + 1,
            f"extra covariates {sat_extra} differ from the in situ file's {ins_extra}",
        )
    extra_names = ins_extra if insitu_path else sat_extra

    if blocks is not None and satellite_path:
        known = set(blocks.ids.tolist())
        for line, row in enumerate(sat_rows, start=2):
            if row[0] not in known:
                raise ParseError(satellite_path, line, 1, f"block_id {row[0]} is not part of the grid")
    for path, rows, col in ((insitu_path, ins_rows, 4), (satellite_path, sat_rows, 2)):
        for line, row in enumerate(rows, start=2):
            if row[col - 1] < 1:
                raise ParseError(path, line, col, f"t must be >= 1, got {row[col - 1]}")

    days = [r[3] for r in ins_rows] + [r[1] for r in sat_rows]
    horizon = T if T is not None else (max(days) if days else 1)
    k = len(extra_names)
    return ObservationSet(
        T=horizon,
        origin=origin,
        insitu_site=_column(ins_rows, 0, np.int64),
        insitu_xy=np.array([r[1:3] for r in ins_rows], dtype=float).reshape(-1, 2),
        insitu_t=_column(ins_rows, 3, np.int64),
        insitu_value=_column(ins_rows, 4, float),
        insitu_extra=np.array([r[5:] for r in ins_rows], dtype=float).reshape(-1, k),
        sat_block=_column(sat_rows, 0, np.int64),
        sat_t=_column(sat_rows, 1, np.int64),
        sat_value=_column(sat_rows, 2, float),
        sat_extra=np.array([r[3:] for r in sat_rows], dtype=float).reshape(-1, k),
        extra_names=tuple(extra_names),
    )


# ==========================================
# 真值、预测目标与预测结果
# ==========================================

def write_truth(path: str, xy: np.ndarray, truth: np.ndarray) -> None:
    """留出点真值，``truth`` 为 (T, n_pred)，按天优先写出。"""
    T, n = truth.shape
    rows = ((i, xy[i, 0], xy[i, 1], t + 1, truth[t, i]) for t in range(T) for i in range(n))
    write_rows(path, TRUTH_COLUMNS, rows)


def read_truth(path: str) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """返回 (site_ids, xy, truth)，truth 为 (T, n_pred)；每个点每天必须各有一行。"""
    _, rows = read_rows(path, TRUTH_COLUMNS, {"site_id": _parse_int, "t": _parse_int})
    if not rows:
        raise ParseError(path, 2, 1, "truth file has no rows")
    ids = sorted({r[0] for r in rows})
    days = sorted({r[3] for r in rows})
    pos = {s: k for k, s in enumerate(ids)}
    xy = np.full((len(ids), 2), np.nan)
    truth = np.full((len(days), len(ids)), np.nan)
    for line, (s, x, y, t, v) in enumerate(rows, start=2):
        k = pos[s]
        if not np.isnan(xy[k, 0]) and (xy[k, 0] != x or xy[k, 1] != y):
            raise ParseError(path, line, 2, f"site {s} changes location")
        xy[k] = (x, y)
        truth[days.index(t), k] = v
    if days != list(range(1, len(days) + 1)) or np.isnan(truth).any():
        raise ParseError(path, 2, 4, "every held-out site needs one row for each day 1..T")
    return np.asarray(ids, dtype=np.int64), xy, truth


def read_targets(path: str, blocks: Optional[BlockSet] = None) -> TargetSet:
    """targets.csv：``kind`` 为 point / block，``quantity`` 为 latent / observation。

    block 目标的坐标列被忽略，使用 block 质心。
    """

    def kind(text):
        if text not in ("point", "block"):
            raise ValueError(f"kind must be point or block, got {text!r}")
        return text

    def quantity(text):
        if text not in ("latent", "observation"):
            raise ValueError(f"quantity must be latent or observation, got {text!r}")
        return text

    header, rows = read_rows(
        path,
        TARGET_COLUMNS,
        {"kind": kind, "id": _parse_int, "t": _parse_int, "quantity": quantity},
        allow_extra=True,
    )
    xy = np.array([r[2:4] for r in rows], dtype=float).reshape(-1, 2)
    for line, row in enumerate(rows, start=2):
        if row[0] == "block":
            if blocks is None:
                raise ParseError(path, line, 1, "block targets need a grid file")
            try:
                xy[line - 2] = blocks.centroid(blocks.position(row[1]))
            except ConfigError:
                raise ParseError(path, line, 2, f"block_id {row[1]} is not part of the grid") from None
    k = len(header) - len(TARGET_COLUMNS)
    return TargetSet(
        kind=[r[0] for r in rows],
        source_id=_column(rows, 1, np.int64),
        xy=xy,
        t=_column(rows, 4, np.int64),
        quantity=[r[5] for r in rows],
        extra=np.array([r[6:] for r in rows], dtype=float).reshape(-1, k) if k else None,
    )


def write_predictions(path: str, pred: Predictions) -> None:
    tg = pred.targets
    rows = (
        (tg.kind[i], tg.source_id[i], tg.xy[i, 0], tg.xy[i, 1], tg.t[i], tg.quantity[i],
         pred.mean[i], pred.sd[i], pred.q025[i], pred.q975[i])
        for i in range(len(tg))
    )
    write_rows(path, PREDICTION_COLUMNS, rows)


def read_predictions(path: str) -> Tuple[TargetSet, np.ndarray]:
    """返回 (目标, (n, 4) 的 mean/sd/q025/q975)。"""
    _, rows = read_rows(
        path, PREDICTION_COLUMNS, {"kind": str, "id": _parse_int, "t": _parse_int, "quantity": str}
    )
    targets = TargetSet(
        kind=[r[0] for r in rows],
        source_id=_column(rows, 1, np.int64),
        xy=np.array([r[2:4] for r in rows], dtype=float).reshape(-1, 2),
        t=_column(rows, 4, np.int64),
        quantity=[r[5] for r in rows],
    )
    return targets, np.array([r[6:10] for r in rows], dtype=float).reshape(-1, 4)


# ==========================================
# 顶点场（作图用）
# ==========================================

def write_field(path: str, mean: np.ndarray, sd: np.ndarray) -> None:
    """(T, G) 的后验均值和标准差。"""
    T, G = mean.shape
    write_rows(path, FIELD_COLUMNS, ((t + 1, g, mean[t, g], sd[t, g]) for t in range(T) for g in range(G)))


def write_truth_field(path: str, values: np.ndarray) -> None:
    T, G = values.shape
    write_rows(path, TRUTH_FIELD_COLUMNS, ((t + 1, g, values[t, g]) for t in range(T) for g in range(G)))


def _read_day_vertex(path: str, columns: Sequence[str]) -> List[np.ndarray]:
    _, rows = read_rows(path, columns, {"t": _parse_int, "vertex": _parse_int})
    if not rows:
        raise ParseError(path, 2, 1, "field file has no rows")
    T = max(r[0] for r in rows)
    G = max(r[1] for r in rows) + 1
    out = [np.full((T, G), np.nan) for _ in columns[2:]]
    for line, row in enumerate(rows, start=2):
        t, g = row[0], row[1]
        if t < 1 or g < 0:
            raise ParseError(path, line, 1 if t < 1 else 2, "day must be >= 1 and vertex >= 0")
        for arr, v in zip(out, row[2:]):
            arr[t - 1, g] = v
    if any(np.isnan(arr).any() for arr in out):
        raise ParseError(path, 2, 1, "field file must hold every (day, vertex) pair")
    return out


def read_field(path: str) -> Tuple[np.ndarray, np.ndarray]:
    mean, sd = _read_day_vertex(path, FIELD_COLUMNS)
    return mean, sd


def read_truth_field(path: str) -> np.ndarray:
    (values,) = _read_day_vertex(path, TRUTH_FIELD_COLUMNS)
    return values


# ==========================================
# 模拟研究指标
# ==========================================

def write_metrics(path: str, rows: Iterable[Sequence]) -> None:
    write_rows(path, METRICS_COLUMNS, rows)


def write_aggregate(path: str, rows: Iterable[Sequence]) -> None:
    write_rows(path, AGGREGATE_COLUMNS, rows)


def read_metrics(path: str) -> List[Tuple[int, str, int, str, str, float]]:
    _, rows = read_rows(
        path, METRICS_COLUMNS, {"scenario": _parse_int, "model": str, "replication": _parse_int, "metric": str, "key": str}
    )
    return [tuple(r) for r in rows]
