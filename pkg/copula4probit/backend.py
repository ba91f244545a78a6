# -*- coding: utf-8 -*-
# 数值后端函数，集中放置正态分布、二元正态、积分节点等基础运算
# 通过设置环境变量COPULA4PROBIT_THREADS来指定默认并行数

import os
from functools import lru_cache
import numpy as np
from scipy import special


# 默认并行数与日志级别
default_threads = int(os.environ.get('COPULA4PROBIT_THREADS', 0)) or (
    os.cpu_count() or 1)
default_loglevel = os.environ.get('COPULA4PROBIT_LOGLEVEL', 'INFO').upper()

_inv_sqrt_2pi = 1. / np.sqrt(2 * np.pi)


def norm_cdf(x):
    """标准正态分布函数
    """
    return special.ndtr(x)


def norm_pdf(x):
    """标准正态密度
    """
    x = np.asarray(x, dtype=float)
    return _inv_sqrt_2pi * np.exp(-0.5 * x * x)


def norm_ppf(u):
    """标准正态分位数
    """
    return special.ndtri(u)


@lru_cache(maxsize=None)
def _legendre(n):
    nodes, weights = np.polynomial.legendre.leggauss(n)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def gauss_legendre(n, a=0., b=1.):
    """区间[a, b]上的n点Gauss-Legendre节点与权重
    """
    nodes, weights = _legendre(n)
    half = 0.5 * (b - a)
    return half * nodes + 0.5 * (a + b), half * weights


def _bvnu(h, k, r):
    """二元正态上尾概率P(X>h, Y>k)，r为标量相关系数
    Genz (2004) 的Drezner-Wesolowsky型积分：|r|<0.3用6点，
    |r|<0.75用12点，其余用20点Gauss-Legendre；|r|>=0.925时
    换用高相关展开。绝对误差在1e-15量级。
    """
    h, k = np.broadcast_arrays(np.asarray(h, dtype=float),
                               np.asarray(k, dtype=float))
    if r == 0:
        return norm_cdf(-h) * norm_cdf(-k)

    ar = abs(r)
    if ar < 0.3:
        n = 6
    elif ar < 0.75:
        n = 12
    else:
        n = 20
    t, w = _legendre(n)
    x = 1 + t
    hk = h * k
    tp = 2 * np.pi

    if ar < 0.925:
        hs = 0.5 * (h * h + k * k)
        asr = 0.5 * np.arcsin(r)
        sn = np.sin(asr * x)
        e = np.exp((sn * hk[..., None] - hs[..., None]) / (1 - sn**2))
        bvn = e.dot(w) * asr / tp + norm_cdf(-h) * norm_cdf(-k)
        return np.clip(bvn, 0, 1)

    if r < 0:
        k = -k
        hk = -hk
    bvn = np.zeros_like(hk)
    if ar < 1:
        with np.errstate(over='ignore', invalid='ignore', divide='ignore'):
            as_ = (1 - r) * (1 + r)
            a = np.sqrt(as_)
            bs = (h - k)**2
            asr = -0.5 * (bs / as_ + hk)
            c = (4 - hk) / 8
            d = (12 - hk) / 80
            bvn = np.where(
                asr > -100,
                a * np.exp(asr) * (1 - c * (bs - as_) *
                                   (1 - d * bs) / 3 + c * d * as_**2), 0.)
            b = np.sqrt(bs)
            sp = np.sqrt(tp) * norm_cdf(-b / a)
            bvn = bvn - np.where(
                hk > -100,
                np.exp(-0.5 * hk) * sp * b * (1 - c * bs * (1 - d * bs) / 3),
                0.)
            a = 0.5 * a
            xs = (a * x)**2
            asr = -0.5 * (bs[..., None] / xs + hk[..., None])
            sp = 1 + c[..., None] * xs * (1 + 5 * d[..., None] * xs)
            rs = np.sqrt(1 - xs)
            ep = np.exp(-0.5 * hk[..., None] * xs / (1 + rs)**2) / rs
            terms = np.where(asr > -100, np.exp(asr) * (sp - ep), 0.)
            bvn = (a * terms.dot(w) - bvn) / tp
    if r > 0:
        bvn = bvn + norm_cdf(-np.maximum(h, k))
    else:
        L = np.where(h < 0,
                     norm_cdf(k) - norm_cdf(h),
                     norm_cdf(-h) - norm_cdf(-k))
        bvn = np.where(h >= k, -bvn, L - bvn)
    return np.clip(bvn, 0, 1)


def bvn_cdf(h, k, r):
    """二元标准正态分布函数P(X<=h, Y<=k)
    """
    return _bvnu(-np.asarray(h, dtype=float), -np.asarray(k, dtype=float),
                 float(r))


def bvn_pdf(x, y, r):
    """二元标准正态密度
    """
    s2 = (1 - r) * (1 + r)
    q = (x * x - 2 * r * x * y + y * y) / s2
    return np.exp(-0.5 * q) / (2 * np.pi * np.sqrt(s2))


def bisect(func, target, lo, hi, tol=1e-10, max_iter=200):
    """向量化二分法：求单调递增函数func满足func(x)=target的x
    lo、hi为初始区间（可广播），要求func(lo)<=target<=func(hi)。
    """
    target = np.asarray(target, dtype=float)
    lo = np.broadcast_to(np.asarray(lo, dtype=float), target.shape).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=float), target.shape).copy()
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        below = func(mid) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo < tol):
            break
    return 0.5 * (lo + hi)


def tanh_bijection(eta, scale=1.):
    """实数轴到(-scale, scale)：返回(scale·tanh(η), 导数)
    """
    return float(scale * np.tanh(eta)), float(scale / np.cosh(eta)**2)


def exp_bijection(eta, offset=0.):
    """实数轴到(offset, ∞)：返回(offset + exp(η), 导数)
    """
    value = float(np.exp(eta))
    return offset + value, value
