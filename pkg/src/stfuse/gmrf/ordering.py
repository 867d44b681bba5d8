"""填充约简排序：贪心最小度，过大时退回 reverse Cuthill-McKee。"""

from __future__ import annotations

import logging
import os

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import reverse_cuthill_mckee

from stfuse._jit import njit

logger = logging.getLogger(__name__)

# 稠密布尔消元图的规模上限（n² 字节）
MAX_MINDEG_DIM = int(os.getenv("STFUSE_MINDEG_MAX_DIM", "12000"))


@njit(cache=True)
def _minimum_degree(indptr, indices, n):
    adj = np.zeros((n, n), dtype=np.bool_)
    deg = np.zeros(n, dtype=np.int64)
    for i in range(n):
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            if j != i and not adj[i, j]:
                adj[i, j] = True
                adj[j, i] = True
                deg[i] += 1
                deg[j] += 1
    alive = np.ones(n, dtype=np.bool_)
    perm = np.empty(n, dtype=np.int64)
    nbr = np.empty(n, dtype=np.int64)
    for step in range(n):
        best = -1
        best_deg = n + 1
        for i in range(n):
            if alive[i] and deg[i] < best_deg:
                best = i
                best_deg = deg[i]
        perm[step] = best
        alive[best] = False
        m = 0
        for j in range(n):
            if alive[j] and adj[best, j]:
                nbr[m] = j
                m += 1
        # 消去 best：其邻居两两连成团
        for a in range(m):
            u = nbr[a]
            deg[u] -= 1
            for b in range(a + 1, m):
                w = nbr[b]
                if not adj[u, w]:
                    adj[u, w] = True
                    adj[w, u] = True
                    deg[u] += 1
                    deg[w] += 1
    return perm


def _symmetric_pattern(pattern) -> sp.csr_matrix:
    A = sp.csr_matrix(pattern, copy=True)
    A.data = np.ones_like(A.data)
    S = sp.csr_matrix(A + A.T)
    S.sort_indices()
    return S


def minimum_degree(pattern) -> np.ndarray:
    """对称稀疏模式的最小度排序，度数相同时取编号最小的顶点。"""
    A = _symmetric_pattern(pattern)
    n = A.shape[0]
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    return _minimum_degree(A.indptr.astype(np.int64), A.indices.astype(np.int64), n)


def fill_reducing_order(pattern) -> np.ndarray:
    A = sp.csr_matrix(pattern)
    n = A.shape[0]
    if n <= MAX_MINDEG_DIM:
        return minimum_degree(A)
    logger.warning("dimension %d exceeds minimum-degree limit %d, using reverse Cuthill-McKee", n, MAX_MINDEG_DIM)
    return np.asarray(reverse_cuthill_mckee(_symmetric_pattern(A), symmetric_mode=True), dtype=np.int64)
