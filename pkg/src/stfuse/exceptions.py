"""stfuse 的异常层次。

库代码只抛出这里定义的异常；CLI 在 ``stfuse.main`` 中把它们映射为退出码。
"""

from __future__ import annotations

from typing import Any, List, Optional


class StfuseError(Exception):
    """Base class of every error raised by stfuse."""


class ConfigError(StfuseError, ValueError):
    """参数或配置不合法。"""


class DomainError(StfuseError, ValueError):
    """研究区域多边形退化（面积为 0 或顶点不足）。"""


class GeometryError(StfuseError):
    """Point or block outside the mesh, or a degenerate triangle."""

    def __init__(self, message: str, index: Optional[int] = None) -> None:
        super().__init__(message)
        self.index = index


class NumericalError(StfuseError, ArithmeticError):
    """Cholesky 分解在 jitter 递增后仍然失败。"""


class FitError(StfuseError):
    """Hyperparameter optimisation did not converge; ``trace`` keeps the evaluations."""

    def __init__(self, message: str, trace: Optional[List[Any]] = None) -> None:
        super().__init__(message)
        self.trace = list(trace or [])


class StudyError(StfuseError):
    """模拟研究中某个 (scenario, model) 单元失败比例过高。"""


class ParseError(StfuseError):
    """输入文件解析失败，消息中包含文件、行号和列号。"""

    def __init__(self, path: str, line: int, column: int, message: str) -> None:
        super().__init__(f"{path}:{line}:{column}: {message}")
        self.path = path
        self.line = line
        self.column = column
