"""稀疏 Cholesky 分解：消元树、行模式可达集、上视（up-looking）数值分解与三角求解。

分解的是置换后的矩阵 P Q Pᵀ = L Lᵀ，L 以 CSC 存储，每列第一个元素是对角元。
符号分析（排序、消元树、列计数）按稀疏模式缓存，同一模式的矩阵只做一次。
"""

from __future__ import annotations

import hashlib
import logging
from collections import OrderedDict
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import scipy.sparse as sp

from stfuse._jit import njit
from stfuse.exceptions import NumericalError
from stfuse.gmrf.ordering import fill_reducing_order
from stfuse.gmrf.sparse import SparseSym

logger = logging.getLogger(__name__)

JITTER_STEPS = (1e-10, 1e-8, 1e-6)
# 每次批量三角求解的右端列数
SOLVE_CHUNK = 256
_SYMBOLIC_CACHE_SIZE = 32
_symbolic_cache: "OrderedDict[str, _Symbolic]" = OrderedDict()


@njit(cache=True)
def cs_etree(Ap, Ai, n):
    parent = np.full(n, -1, dtype=np.int64)
    ancestor = np.full(n, -1, dtype=np.int64)
    for k in range(n):
        for p in range(Ap[k], Ap[k + 1]):
            i = Ai[p]
            while i != -1 and i < k:
                inext = ancestor[i]
                ancestor[i] = k
                if inext == -1:
                    parent[i] = k
                i = inext
    return parent


@njit(cache=True)
def cs_ereach(Ap, Ai, k, parent, s, w):
    """L 第 k 行的非零模式，写入 s[top:n]，返回 top。w 是以 k 为标记值的工作数组。"""
    n = parent.shape[0]
    top = n
    w[k] = k
    for p in range(Ap[k], Ap[k + 1]):
        i = Ai[p]
        if i > k:
            continue
        length = 0
        while w[i] != k:
            s[length] = i
            length += 1
            w[i] = k
            i = parent[i]
        while length > 0:
            top -= 1
            length -= 1
            s[top] = s[length]
    return top


@njit(cache=True)
def _column_counts(Ap, Ai, parent, n):
    counts = np.ones(n, dtype=np.int64)
    s = np.empty(n, dtype=np.int64)
    w = np.full(n, -1, dtype=np.int64)
    for k in range(n):
        top = cs_ereach(Ap, Ai, k, parent, s, w)
        for t in range(top, n):
            counts[s[t]] += 1
    return counts


@njit(cache=True)
def cs_chol(Ap, Ai, Ax, parent, Lp):
    """上视数值分解。返回 (ok, Li, Lx)，ok 为 False 时第一个非正主元所在列另存于 Li[0]。"""
    n = parent.shape[0]
    nnz = Lp[n]
    Li = np.empty(nnz, dtype=np.int64)
    Lx = np.empty(nnz, dtype=np.float64)
    c = Lp[:n].copy()
    s = np.empty(n, dtype=np.int64)
    w = np.full(n, -1, dtype=np.int64)
    x = np.zeros(n, dtype=np.float64)
    for k in range(n):
        top = cs_ereach(Ap, Ai, k, parent, s, w)
        x[k] = 0.0
        for p in range(Ap[k], Ap[k + 1]):
            if Ai[p] <= k:
                x[Ai[p]] = Ax[p]
        d = x[k]
        x[k] = 0.0
        for t in range(top, n):
            i = s[t]
            lki = x[i] / Lx[Lp[i]]
            x[i] = 0.0
            for p in range(Lp[i] + 1, c[i]):
                x[Li[p]] -= Lx[p] * lki
            d -= lki * lki
            p = c[i]
            c[i] += 1
            Li[p] = k
            Lx[p] = lki
        if d <= 0.0 or not np.isfinite(d):
            Li[0] = k
            return False, Li, Lx
        p = c[k]
        c[k] += 1
        Li[p] = k
        Lx[p] = np.sqrt(d)
    return True, Li, Lx


@njit(cache=True)
def cs_lsolve(Lp, Li, Lx, X):
    n = Lp.shape[0] - 1
    for r in range(X.shape[1]):
        for j in range(n):
            X[j, r] /= Lx[Lp[j]]
            xj = X[j, r]
            for p in range(Lp[j] + 1, Lp[j + 1]):
                X[Li[p], r] -= Lx[p] * xj


@njit(cache=True)
def cs_ltsolve(Lp, Li, Lx, X):
    n = Lp.shape[0] - 1
    for r in range(X.shape[1]):
        for j in range(n - 1, -1, -1):
            acc = X[j, r]
            for p in range(Lp[j] + 1, Lp[j + 1]):
                acc -= Lx[p] * X[Li[p], r]
            X[j, r] = acc / Lx[Lp[j]]


@dataclass(frozen=True, eq=False)
class _Symbolic:
    perm: np.ndarray
    parent: np.ndarray
    Lp: np.ndarray
    Up: np.ndarray
    Ui: np.ndarray

    def matches(self, U: sp.csc_matrix) -> bool:
        return np.array_equal(U.indptr, self.Up) and np.array_equal(U.indices, self.Ui)


@dataclass(frozen=True, eq=False)
class Factor:
    """P Q Pᵀ = L Lᵀ，``perm[i]`` 是置换后第 i 行对应的原始行。"""

    perm: np.ndarray
    Lp: np.ndarray
    Li: np.ndarray
    Lx: np.ndarray
    logdet: float
    jitter: float = 0.0

    @property
    def n(self) -> int:
        return int(self.perm.shape[0])

    @property
    def nnz(self) -> int:
        return int(self.Lp[-1])

    def L(self) -> sp.csc_matrix:
        return sp.csc_matrix((self.Lx, self.Li, self.Lp), shape=(self.n, self.n))

    def _as_columns(self, b) -> Tuple[np.ndarray, bool]:
        arr = np.asarray(b, dtype=float)
        vector = arr.ndim == 1
        return np.array(arr.reshape(self.n, -1), dtype=np.float64, order="C"), vector

    def solve_L(self, b) -> np.ndarray:
        """y = L⁻¹ P b."""
        X, vector = self._as_columns(b)
        X = np.ascontiguousarray(X[self.perm])
        cs_lsolve(self.Lp, self.Li, self.Lx, X)
        return X.ravel() if vector else X

    def solve_Lt(self, y) -> np.ndarray:
        """x = Pᵀ L⁻ᵀ y."""
        X, vector = self._as_columns(y)
        cs_ltsolve(self.Lp, self.Li, self.Lx, X)
        out = np.empty_like(X)
        out[self.perm] = X
        return out.ravel() if vector else out

    def solve(self, b) -> np.ndarray:
        """x = Q⁻¹ b，b 可以是向量或 (n, m) 矩阵。"""
        y = self.solve_L(b)
        X, vector = self._as_columns(y)
        cs_ltsolve(self.Lp, self.Li, self.Lx, X)
        out = np.empty_like(X)
        out[self.perm] = X
        return out.ravel() if vector else out

    def sample(self, z) -> np.ndarray:
        """Pᵀ L⁻ᵀ z，z ~ N(0, I) 时服从 N(0, Q⁻¹)。"""
        return self.solve_Lt(z)

    def quad_form(self, b) -> float:
        y = self.solve_L(b)
        return float(np.dot(y, y))

    def row_variances(self, B) -> np.ndarray:
        """diag(B Q⁻¹ Bᵀ)，按块求解以控制内存。"""
        B = sp.csr_matrix(B)
        out = np.empty(B.shape[0])
        for start in range(0, B.shape[0], SOLVE_CHUNK):
            chunk = B[start:start + SOLVE_CHUNK].T.toarray()
            y = self.solve_L(chunk)
            out[start:start + SOLVE_CHUNK] = np.einsum("ij,ij->j", y, y)
        return out


def _pattern_key(lower: sp.csc_matrix) -> str:
    h = hashlib.sha1()
    h.update(np.int64(lower.shape[0]).tobytes())
    h.update(lower.indptr.astype(np.int64).tobytes())
    h.update(lower.indices.astype(np.int64).tobytes())
    return h.hexdigest()


def _symbolic(Q: SparseSym) -> _Symbolic:
    lower = Q.lower
    key = _pattern_key(lower)
    sym = _symbolic_cache.get(key)
    if sym is not None:
        _symbolic_cache.move_to_end(key)
        return sym

    n = Q.dim
    perm = fill_reducing_order(Q.full())
    U = _permuted_upper(Q.full(), perm)
    parent = cs_etree(U.indptr, U.indices, n)
    counts = _column_counts(U.indptr, U.indices, parent, n)
    Lp = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=Lp[1:])
    sym = _Symbolic(perm=perm, parent=parent, Lp=Lp, Up=U.indptr, Ui=U.indices)
    _symbolic_cache[key] = sym
    if len(_symbolic_cache) > _SYMBOLIC_CACHE_SIZE:
        _symbolic_cache.popitem(last=False)
    logger.debug("symbolic analysis: n=%d, nnz(L)=%d", n, int(Lp[-1]))
    return sym


def _permuted_upper(full: sp.csr_matrix, perm: np.ndarray) -> sp.csc_matrix:
    C = sp.csr_matrix(full)[perm][:, perm]
    U = sp.triu(C, format="csc")
    U.sort_indices()
    U.indptr = U.indptr.astype(np.int64)
    U.indices = U.indices.astype(np.int64)
    return U


def factorize(Q: SparseSym) -> Factor:
    """Cholesky 分解。失败时依次在对角线上加 1e-10、1e-8、1e-6 倍平均对角元重试。

    Raises:
        NumericalError: 加过全部 jitter 后仍不正定
    """
    sym = _symbolic(Q)
    full = Q.full()
    mean_diag = float(np.mean(np.abs(Q.diagonal()))) if Q.dim else 0.0
    eye = sp.identity(Q.dim, format="csr")

    for jitter in (0.0,) + JITTER_STEPS:
        M = full if jitter == 0.0 else full + (jitter * mean_diag) * eye
        U = _permuted_upper(M, sym.perm)
        parent, Lp = sym.parent, sym.Lp
        if not sym.matches(U):
            # jitter 改变了稀疏结构（补上缺失的对角元），重新做符号分析
            parent = cs_etree(U.indptr, U.indices, Q.dim)
            counts = _column_counts(U.indptr, U.indices, parent, Q.dim)
            Lp = np.zeros(Q.dim + 1, dtype=np.int64)
            np.cumsum(counts, out=Lp[1:])
        ok, Li, Lx = cs_chol(U.indptr, U.indices, U.data.astype(np.float64), parent, Lp)
        if ok:
            if jitter > 0.0:
                logger.warning("Cholesky succeeded after adding jitter %.0e x mean diagonal", jitter)
            logdet = 2.0 * float(np.sum(np.log(Lx[Lp[:-1]])))
            return Factor(perm=sym.perm, Lp=Lp, Li=Li, Lx=Lx, logdet=logdet, jitter=jitter * mean_diag)
        logger.debug("Cholesky failed at pivot %d with jitter %.0e", int(Li[0]), jitter)

    raise NumericalError(f"matrix of dimension {Q.dim} is not positive definite after jitter escalation")


def solve(Q: SparseSym, b) -> np.ndarray:
    return Q.factor().solve(b)


def logdet(Q: SparseSym) -> float:
    return Q.factor().logdet


def clear_symbolic_cache() -> None:
    _symbolic_cache.clear()
