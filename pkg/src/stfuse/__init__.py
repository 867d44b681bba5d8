"""stfuse：原位与卫星观测的时空 SPDE 融合。"""

__version__ = "0.1.0"
