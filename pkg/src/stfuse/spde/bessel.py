"""第二类修正 Bessel 函数 K0 / K1。

x <= 2 用幂级数，x > 2 用 Steed 连分式（大参数展开的收敛形式）。
"""

import math

import numpy as np

from stfuse._jit import njit

EULER_GAMMA = 0.57721566490153286061
CROSSOVER = 2.0
_EPS = 1e-16
_MAX_TERMS = 200


@njit(cache=True)
def _series_k0_k1(x):
    t = 0.25 * x * x
    lg = math.log(0.5 * x)
    # psi(k+1) = -gamma + H_k
    psi_k = -EULER_GAMMA
    term0 = 1.0  # t^k / (k!)^2
    term1 = 1.0  # t^k / (k! (k+1)!)
    i0 = 0.0
    i1s = 0.0
    s0 = 0.0
    s1 = 0.0
    for k in range(_MAX_TERMS):
        psi_k1 = psi_k + 1.0 / (k + 1)
        i0 += term0
        i1s += term1
        s0 += psi_k * term0
        s1 += (psi_k + psi_k1) * term1
        if term0 < _EPS * abs(i0) and k > 2:
            break
        term0 *= t / ((k + 1) * (k + 1))
        term1 *= t / ((k + 1) * (k + 2))
        psi_k = psi_k1
    i1 = 0.5 * x * i1s
    k0 = -lg * i0 + s0
    k1 = 1.0 / x + lg * i1 - 0.25 * x * s1
    return k0, k1


@njit(cache=True)
def _steed_k0_k1(x):
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = d
    delh = d
    q1 = 0.0
    q2 = 1.0
    a1 = 0.25
    q = a1
    c = a1
    a = -a1
    s = 1.0 + q * delh
    for i in range(1, 10 * _MAX_TERMS):
        a -= 2.0 * i
        c = -a * c / (i + 1.0)
        qnew = (q1 - b * q2) / a
        q1 = q2
        q2 = qnew
        q += c * qnew
        b += 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h += delh
        dels = q * delh
        s += dels
        if abs(dels / s) < _EPS:
            break
    h = a1 * h
    k0 = math.sqrt(math.pi / (2.0 * x)) * math.exp(-x) / s
    k1 = k0 * (x + 0.5 - h) / x
    return k0, k1


@njit(cache=True)
def _k0_k1_array(x, out0, out1):
    for i in range(x.shape[0]):
        xi = x[i]
        if xi <= 0.0:
            out0[i] = np.inf
            out1[i] = np.inf
        elif xi <= CROSSOVER:
            out0[i], out1[i] = _series_k0_k1(xi)
        else:
            out0[i], out1[i] = _steed_k0_k1(xi)


def k0_k1(x):
    """同时计算 K0(x) 和 K1(x)，x <= 0 处返回 inf。"""
    arr = np.asarray(x, dtype=float)
    flat = np.ascontiguousarray(arr.ravel())
    out0 = np.empty_like(flat)
    out1 = np.empty_like(flat)
    _k0_k1_array(flat, out0, out1)
    return out0.reshape(arr.shape), out1.reshape(arr.shape)


def k0(x):
    return k0_k1(x)[0]


def k1(x):
    return k0_k1(x)[1]
