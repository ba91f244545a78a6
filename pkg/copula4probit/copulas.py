# -*- coding: utf-8 -*-
# 单参数copula族：Gaussian、Frank、Clayton、Gumbel

import numpy as np
from scipy.optimize import brentq
from copula4probit.backend import norm_cdf, norm_ppf, bvn_cdf, bvn_pdf
from copula4probit.backend import gauss_legendre, bisect
from copula4probit.backend import tanh_bijection, exp_bijection
from copula4probit.snippets import DomainError, NoRootError, check_finite


def _check_unit(name, u):
    u = check_finite(name, u)
    if np.any((u < 0) | (u > 1)):
        raise DomainError('%s must lie in [0, 1]' % name)
    return u


def _check_open_unit(name, u):
    u = check_finite(name, u)
    if np.any((u <= 0) | (u >= 1)):
        raise DomainError('%s must lie strictly inside (0, 1)' % name)
    return u


def comonotone_cdf(u1, u2):
    """完全正相依copula min(u1, u2)
    """
    u1, u2 = _check_unit('u1', u1), _check_unit('u2', u2)
    return np.minimum(u1, u2)


def countermonotone_cdf(u1, u2):
    """完全负相依copula max(u1 + u2 - 1, 0)
    """
    u1, u2 = _check_unit('u1', u1), _check_unit('u2', u2)
    return np.maximum(u1 + u2 - 1, 0.)


class Copula(object):
    """copula基类
    子类实现_cdf、_partials、_conditional_inverse，参数rho取各族
    的原生尺度；independence为独立copula对应的参数值。优化时通过
    to_unconstrained/from_unconstrained在实数轴与参数域之间变换。
    """
    name = None
    lower, upper = -np.inf, np.inf
    independence = None
    eta_bounds = (-50., 50.)

    def check(self, rho):
        """检查参数是否在参数域内
        """
        rho = float(rho)
        if not np.isfinite(rho) or not self.admissible(rho):
            raise DomainError('rho=%r is outside the %s domain' %
                              (rho, self.name))
        return rho

    def admissible(self, rho):
        return self.lower < rho < self.upper or rho == self.independence

    def cdf(self, u1, u2, rho):
        """C(u1, u2; rho)，边界C(u,0)=0、C(u,1)=u精确成立
        """
        rho = self.check(rho)
        u1, u2 = np.broadcast_arrays(_check_unit('u1', u1),
                                     _check_unit('u2', u2))
        if rho == self.independence:
            return u1 * u2
        edge0 = (u1 == 0) | (u2 == 0)
        edge1 = (u1 == 1) | (u2 == 1)
        inner = ~(edge0 | edge1)
        a = np.where(inner, u1, 0.5)
        b = np.where(inner, u2, 0.5)
        out = np.clip(self._cdf(a, b, rho), 0, np.minimum(a, b))
        out = np.where(edge1, np.minimum(u1, u2), out)
        return np.where(edge0, 0., out)

    def partials(self, u1, u2, rho):
        """返回(∂C/∂u1, ∂C/∂u2, ∂C/∂rho)，u1、u2须严格在(0,1)内
        """
        rho = self.check(rho)
        u1, u2 = np.broadcast_arrays(_check_open_unit('u1', u1),
                                     _check_open_unit('u2', u2))
        if rho == self.independence:
            return u2 * 1., u1 * 1., self._crho_independence(u1, u2)
        return self._partials(u1, u2, rho)

    def conditional_cdf(self, u1, u2, rho):
        """条件分布P(U2 <= u2 | U1 = u1)，即∂C/∂u1
        """
        return self.partials(u1, u2, rho)[0]

    def conditional_inverse(self, w, u1, rho):
        """条件分位数：求u2使得∂C/∂u1(u1, u2) = w
        """
        rho = self.check(rho)
        w, u1 = np.broadcast_arrays(_check_open_unit('w', w),
                                    _check_open_unit('u1', u1))
        if rho == self.independence:
            return w * 1.
        return np.clip(self._conditional_inverse(w, u1, rho), 0, 1)

    def _conditional_inverse(self, w, u1, rho):
        # 默认用二分法，∂C/∂u1关于u2单调递增
        eps = 1e-15
        func = lambda v: self._partials(u1, np.clip(v, eps, 1 - eps), rho)[0]
        return bisect(func, w, 0., 1., tol=1e-10)

    def _crho_independence(self, u1, u2):
        return np.zeros_like(u1 * u2)

    def sample(self, rho, n, seed=None):
        """条件逆方法抽样，返回(n, 2)数组
        """
        rho = self.check(rho)
        assert int(n) >= 1, 'n must be positive'
        rng = np.random.default_rng(seed)
        u = rng.random((int(n), 2))
        u = np.clip(u, 1e-16, 1 - 1e-16)
        u[:, 1] = self.conditional_inverse(u[:, 1], u[:, 0], rho)
        return u

    def spearman_rho(self, rho):
        """Spearman秩相关 12∫∫C - 3，64点Gauss-Legendre张量积分
        """
        rho = self.check(rho)
        if rho == self.independence:
            return 0.
        x, w = gauss_legendre(64)
        u1, u2 = np.meshgrid(x, x, indexing='ij')
        c = self._cdf(u1, u2, rho)
        return float(12 * w.dot(c).dot(w) - 3)

    def from_spearman(self, rho_sp):
        """spearman_rho的反函数，单调求根
        """
        rho_sp = float(rho_sp)
        if not -1 < rho_sp < 1:
            raise NoRootError('rho_sp=%r is outside (-1, 1)' % rho_sp)
        if rho_sp == 0:
            return self.independence
        lo, hi = self.spearman_bracket
        f = lambda r: self.spearman_rho(r) - rho_sp
        if f(lo) * f(hi) > 0:
            raise NoRootError('rho_sp=%r is not reachable by the %s copula' %
                              (rho_sp, self.name))
        return brentq(f, lo, hi, xtol=1e-12, rtol=1e-12)

    def kendall_tau(self, rho):
        raise NotImplementedError

    def to_unconstrained(self, rho):
        raise NotImplementedError

    def from_unconstrained(self, eta):
        raise NotImplementedError

    def drho_deta(self, eta):
        raise NotImplementedError


class GaussianCopula(Copula):
    """Gaussian copula，参数域(-1, 1)
    """
    name = 'gaussian'
    lower, upper = -1., 1.
    independence = 0.
    eta_bounds = (-20., 20.)
    _scale = 1 - 1e-6

    def _cdf(self, u1, u2, rho):
        return bvn_cdf(norm_ppf(u1), norm_ppf(u2), rho)

    def _partials(self, u1, u2, rho):
        x, y = norm_ppf(u1), norm_ppf(u2)
        s = np.sqrt((1 - rho) * (1 + rho))
        c1 = norm_cdf((y - rho * x) / s)
        c2 = norm_cdf((x - rho * y) / s)
        return c1, c2, bvn_pdf(x, y, rho)

    def _crho_independence(self, u1, u2):
        return bvn_pdf(norm_ppf(u1), norm_ppf(u2), 0.)

    def _conditional_inverse(self, w, u1, rho):
        s = np.sqrt((1 - rho) * (1 + rho))
        return norm_cdf(rho * norm_ppf(u1) + s * norm_ppf(w))

    def spearman_rho(self, rho):
        rho = self.check(rho)
        return float(6 / np.pi * np.arcsin(rho / 2))

    def from_spearman(self, rho_sp):
        rho_sp = float(rho_sp)
        if not -1 < rho_sp < 1:
            raise NoRootError('rho_sp=%r is outside (-1, 1)' % rho_sp)
        return float(2 * np.sin(np.pi * rho_sp / 6))

    def kendall_tau(self, rho):
        return float(2 / np.pi * np.arcsin(self.check(rho)))

    def to_unconstrained(self, rho):
        return float(np.arctanh(np.clip(rho / self._scale, -1 + 1e-12,
                                        1 - 1e-12)))

    def from_unconstrained(self, eta):
        return tanh_bijection(eta, self._scale)[0]

    def drho_deta(self, eta):
        return tanh_bijection(eta, self._scale)[1]


def _debye(k, t):
    """Debye函数D_k(t) = k/t^k ∫₀^t s^k/(e^s - 1) ds，t > 0
    被积函数在s > 60后可以忽略
    """
    x, w = gauss_legendre(64, 0., min(t, 60.))
    return k / t**k * w.dot(x**k / np.expm1(x))


class FrankCopula(Copula):
    """Frank copula，θ∈R，θ=0为独立
    θ<0时用C_θ(u1, u2) = u1 - C_{-θ}(u1, 1-u2)化为θ>0；θ>0时提出
    公因子e^{-θ·min(u1,u2)}在对数尺度上计算，|θ|很大时也不溢出。
    """
    name = 'frank'
    independence = 0.
    eta_bounds = (-500., 500.)
    spearman_bracket = (-500., 500.)

    def admissible(self, rho):
        return bool(np.isfinite(rho))

    def _positive(self, u1, u2, t):
        # 返回θ>0时的(C, C1, C2, Cθ)
        m, M = np.minimum(u1, u2), np.maximum(u1, u2)
        e1, e2 = np.exp(-t * (u1 - m)), np.exp(-t * (u2 - m))
        # (e^{-θu1} + e^{-θu2} - e^{-θ} - e^{-θ(u1+u2)}) e^{θm}，两项均非负
        bracket = (-np.expm1(-t * M) -
                   np.exp(-t * (M - m)) * np.expm1(-t * (1 - M)))
        log_ratio = -t * m + np.log(bracket) - np.log(-np.expm1(-t))
        c = -log_ratio / t
        c1 = -e1 * np.expm1(-t * u2) / bracket
        c2 = -e2 * np.expm1(-t * u1) / bracket
        if t < 1e-6:
            crho = u1 * u2 * (1 - u1) * (1 - u2) / 2
        else:
            dn = (-u1 * e1 - u2 * e2 + np.exp(-t * (1 - m)) +
                  (u1 + u2) * np.exp(-t * M)) / bracket
            crho = log_ratio / t**2 - (dn - 1 / np.expm1(t)) / t
        return c, c1, c2, crho

    def _evaluate(self, u1, u2, rho):
        if rho > 0:
            return self._positive(u1, u2, rho)
        c, c1, c2, crho = self._positive(u1, 1 - u2, -rho)
        return u1 - c, 1 - c1, c2, crho

    def _cdf(self, u1, u2, rho):
        return self._evaluate(u1, u2, rho)[0]

    def _partials(self, u1, u2, rho):
        return self._evaluate(u1, u2, rho)[1:]

    def _crho_independence(self, u1, u2):
        return u1 * u2 * (1 - u1) * (1 - u2) / 2

    def _conditional_inverse(self, w, u1, rho):
        t = rho
        if abs(t) > 35:
            return Copula._conditional_inverse(self, w, u1, rho)
        a, e = np.expm1(-t * u1), np.expm1(-t)
        b = w * e / (np.exp(-t * u1) - w * a)
        return -np.log1p(b) / t

    def spearman_rho(self, rho):
        """ρ_sp = 1 - 12(D₁(θ) - D₂(θ))/θ
        """
        t = self.check(rho)
        if t == 0:
            return 0.
        a = abs(t)
        value = 1 - 12 / a * (_debye(1, a) - _debye(2, a))
        return float(np.sign(t) * value)

    def kendall_tau(self, rho):
        t = self.check(rho)
        if t == 0:
            return 0.
        tau = 1 - 4 / abs(t) * (1 - _debye(1, abs(t)))
        return float(np.sign(t) * tau)

    def to_unconstrained(self, rho):
        return float(rho)

    def from_unconstrained(self, eta):
        return float(eta)

    def drho_deta(self, eta):
        return 1.


class ClaytonCopula(Copula):
    """Clayton copula，θ>0，θ→0为独立
    """
    name = 'clayton'
    lower, upper = 0., np.inf
    independence = 0.
    eta_bounds = (-20., 6.)
    spearman_bracket = (1e-6, 300.)
    _offset = 1e-6

    def _log_s(self, u1, u2, rho):
        # log(u1^-θ + u2^-θ - 1)
        tu, tv = -rho * np.log(u1), -rho * np.log(u2)
        m = np.maximum(tu, tv)
        with np.errstate(over='ignore', invalid='ignore'):
            small = np.log1p(np.expm1(np.minimum(tu, 30.)) +
                             np.expm1(np.minimum(tv, 30.)))
            large = m + np.log(np.exp(tu - m) + np.exp(tv - m) - np.exp(-m))
        return np.where(m <= 30, small, large), tu, tv

    def _cdf(self, u1, u2, rho):
        log_s = self._log_s(u1, u2, rho)[0]
        return np.exp(-log_s / rho)

    def _partials(self, u1, u2, rho):
        t = rho
        lu, lv = np.log(u1), np.log(u2)
        log_s, tu, tv = self._log_s(u1, u2, t)
        c = np.exp(-log_s / t)
        c1 = np.exp((-t - 1) * lu + (-1 / t - 1) * log_s)
        c2 = np.exp((-t - 1) * lv + (-1 / t - 1) * log_s)
        if t < 1e-5:
            crho = u1 * u2 * lu * lv
        else:
            crho = c * (log_s / t**2 +
                        (lu * np.exp(tu - log_s) + lv * np.exp(tv - log_s)) / t)
        return c1, c2, crho

    def _crho_independence(self, u1, u2):
        return u1 * u2 * np.log(u1) * np.log(u2)

    def _conditional_inverse(self, w, u1, rho):
        t = rho
        # S = (w u1^{θ+1})^{-θ/(1+θ)}，u2 = (S - u1^-θ + 1)^{-1/θ}
        log_s = -t / (1 + t) * (np.log(w) + (t + 1) * np.log(u1))
        log_base = np.log1p(np.expm1(log_s) - np.expm1(-t * np.log(u1)))
        return np.exp(-log_base / t)

    def kendall_tau(self, rho):
        t = self.check(rho)
        return float(t / (t + 2))

    def to_unconstrained(self, rho):
        return float(np.log(max(rho - self._offset, 1e-12)))

    def from_unconstrained(self, eta):
        return exp_bijection(eta, self._offset)[0]

    def drho_deta(self, eta):
        return exp_bijection(eta, self._offset)[1]


class GumbelCopula(Copula):
    """Gumbel copula，θ>=1，θ=1为独立
    """
    name = 'gumbel'
    lower, upper = 1., np.inf
    independence = 1.
    eta_bounds = (-20., 5.)
    spearman_bracket = (1., 100.)
    _offset = 1 + 1e-6

    def _parts(self, u1, u2, rho):
        lx, ly = np.log(-np.log(u1)), np.log(-np.log(u2))
        log_w = np.logaddexp(rho * lx, rho * ly)
        a = np.exp(log_w / rho)
        return lx, ly, log_w, a

    def _cdf(self, u1, u2, rho):
        return np.exp(-self._parts(u1, u2, rho)[3])

    def _partials(self, u1, u2, rho):
        t = rho
        lx, ly, log_w, a = self._parts(u1, u2, t)
        c = np.exp(-a)
        log_a = log_w / t
        c1 = np.exp(-a + (1 - t) * log_a + (t - 1) * lx - np.log(u1))
        c2 = np.exp(-a + (1 - t) * log_a + (t - 1) * ly - np.log(u2))
        dw = (np.exp(t * lx - log_w) * lx + np.exp(t * ly - log_w) * ly) / t
        crho = -c * a * (-log_w / t**2 + dw)
        return c1, c2, crho

    def _crho_independence(self, u1, u2):
        return self._partials(u1, u2, 1.)[2]

    def kendall_tau(self, rho):
        return float(1 - 1 / self.check(rho))

    def to_unconstrained(self, rho):
        return float(np.log(max(rho - self._offset, 1e-12)))

    def from_unconstrained(self, eta):
        return exp_bijection(eta, self._offset)[0]

    def drho_deta(self, eta):
        return exp_bijection(eta, self._offset)[1]


class ComonotoneCopula(Copula):
    """完全正相依copula，只用于数据生成与识别实验，不参与估计
    """
    name = 'comonotone'
    independence = None

    def check(self, rho=None):
        return 1.

    def cdf(self, u1, u2, rho=None):
        return comonotone_cdf(u1, u2)

    def partials(self, u1, u2, rho=None):
        raise DomainError('the comonotone copula is not differentiable')

    def conditional_inverse(self, w, u1, rho=None):
        w, u1 = np.broadcast_arrays(_check_open_unit('w', w),
                                    _check_open_unit('u1', u1))
        return u1 * 1.

    def spearman_rho(self, rho=None):
        return 1.

    def kendall_tau(self, rho=None):
        return 1.


copulas = {
    'gaussian': GaussianCopula(),
    'frank': FrankCopula(),
    'clayton': ClaytonCopula(),
    'gumbel': GumbelCopula(),
}
comonotone = ComonotoneCopula()


def get_copula(family):
    """按名字取copula族，comonotone只在数据生成中可用
    """
    if isinstance(family, Copula):
        return family
    name = str(family).lower()
    if name == comonotone.name:
        return comonotone
    if name not in copulas:
        raise DomainError('unknown copula family %r, expected one of %s' %
                          (family, sorted(copulas)))
    return copulas[name]


class DependenceParam(object):
    """带族信息的依赖参数，构造时检查参数域
    """
    def __init__(self, family, rho):
        self.family = get_copula(family)
        self.rho = self.family.check(rho)

    @classmethod
    def from_spearman(cls, family, rho_sp):
        family = get_copula(family)
        return cls(family, family.from_spearman(rho_sp))

    @property
    def spearman(self):
        return self.family.spearman_rho(self.rho)

    def __float__(self):
        return self.rho

    def __repr__(self):
        return 'DependenceParam(%s, %r)' % (self.family.name, self.rho)


def cdf(family, u1, u2, rho):
    return get_copula(family).cdf(u1, u2, rho)


def partials(family, u1, u2, rho):
    return get_copula(family).partials(u1, u2, rho)


def spearman_rho(family, rho):
    return get_copula(family).spearman_rho(rho)


def from_spearman(family, rho_sp):
    return get_copula(family).from_spearman(rho_sp)


def sample(family, rho, n, seed=None):
    return get_copula(family).sample(rho, n, seed)


class OrderingReport(object):
    """SI序扫描结果：违反点列表为空即通过
    """
    def __init__(self, family, n_points, violations, min_crho):
        self.family = family
        self.n_points = n_points
        self.violations = violations
        self.min_crho = min_crho

    @property
    def passed(self):
        return len(self.violations) == 0

    def to_dict(self):
        return {
            'family': self.family,
            'n_points': self.n_points,
            'n_violations': len(self.violations),
            'violations': [list(v) for v in self.violations],
            'min_crho': self.min_crho,
            'passed': self.passed,
        }


def si_ordering_scan(family, rho_grid, u_grid):
    """在网格上检验∂C/∂rho > 0（SI序的推论），违反点只报告不抛错
    """
    family = get_copula(family)
    u = _check_open_unit('u_grid', np.atleast_1d(u_grid))
    u1, u2 = np.meshgrid(u, u, indexing='ij')
    u1, u2 = u1.ravel(), u2.ravel()
    violations, n_points, min_crho = [], 0, np.inf
    for rho in np.atleast_1d(rho_grid):
        rho = family.check(rho)
        crho = family.partials(u1, u2, rho)[2]
        n_points += len(crho)
        min_crho = min(min_crho, float(np.min(crho)))
        for i in np.flatnonzero(~(crho > 0)):
            violations.append((rho, float(u1[i]), float(u2[i]),
                               float(crho[i])))
    return OrderingReport(family.name, n_points, violations, min_crho)
