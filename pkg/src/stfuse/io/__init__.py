"""
输入输出模块

CSV 数据格式、fit.json 持久化（jsonschema 校验）以及 SVG 报告。
"""

from .csv_io import (
    read_domain,
    read_field,
    read_grid,
    read_mesh_arrays,
    read_metrics,
    read_observations,
    read_predictions,
    read_targets,
    read_truth,
    read_truth_field,
    write_aggregate,
    write_domain,
    write_field,
    write_grid,
    write_insitu,
    write_mesh,
    write_metrics,
    write_predictions,
    write_satellite,
    write_truth,
    write_truth_field,
)
from .fit_json import SCHEMA_VERSION, fit_to_dict, load_fit_json, restore_fit, write_fit_json
from .schema_validator import load_fit_schema, validate_fit_document

__all__ = [
    "SCHEMA_VERSION",
    "fit_to_dict",
    "load_fit_json",
    "load_fit_schema",
    "read_domain",
    "read_field",
    "read_grid",
    "read_mesh_arrays",
    "read_metrics",
    "read_observations",
    "read_predictions",
    "read_targets",
    "read_truth",
    "read_truth_field",
    "restore_fit",
    "validate_fit_document",
    "write_aggregate",
    "write_domain",
    "write_field",
    "write_fit_json",
    "write_grid",
    "write_insitu",
    "write_mesh",
    "write_metrics",
    "write_predictions",
    "write_satellite",
    "write_truth",
    "write_truth_field",
]
