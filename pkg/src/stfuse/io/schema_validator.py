import json
import logging
import os
from typing import Any, Dict

from jsonschema import ValidationError, validate

from stfuse.exceptions import ParseError

logger = logging.getLogger(__name__)

SCHEMA_PATH = os.path.join(os.path.dirname(__file__), "../config/fit_schema.json")


def load_fit_schema(schema_path: str = SCHEMA_PATH) -> Dict[str, Any]:
    """从文件系统加载 fit.json 的 Schema。"""
    with open(schema_path, "r", encoding="utf-8") as schema_file:
        return json.load(schema_file)


def validate_fit_document(data: Dict[str, Any], schema: Dict[str, Any], path: str = "<fit.json>") -> None:
    """验证 fit.json 内容是否符合 Schema，不符合时抛出 ParseError。"""
    try:
        validate(instance=data, schema=schema)
    except ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        logger.debug("schema validation failed at %s: %s", where, exc.message)
        raise ParseError(path, 1, 1, f"{where}: {exc.message}") from exc
