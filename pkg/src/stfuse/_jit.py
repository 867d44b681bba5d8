"""numba 的可选加速。没有安装 numba 时 ``njit`` 退化为原样返回函数。"""

import logging

logger = logging.getLogger(__name__)

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - depends on the environment
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def wrap(func):
            return func

        return wrap

    logger.warning("numba not installed, sparse kernels run as plain Python")

__all__ = ["HAS_NUMBA", "njit"]
