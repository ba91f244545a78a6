# -*- coding: utf-8 -*-
# 边缘分布：参数族、正态混合、以及G变换下的多项式筛分布

import numpy as np
from numpy.polynomial import legendre as L
from scipy import special
from scipy.optimize import brentq
from copula4probit.backend import norm_cdf, norm_pdf, norm_ppf, bisect
from copula4probit.snippets import DomainError, NoRootError, check_finite

# 筛系数的盒约束，a₀固定为1
sieve_bound = 1e3


class TransformG(object):
    """把实数轴映到(0,1)的严格增函数G，以及g=G'和G^{-1}
    """
    def __init__(self, name, df=None):
        self.name = name
        self.df = df

    def cdf(self, x):
        if self.name == 'normal':
            return norm_cdf(x)
        elif self.name == 'logistic':
            return special.expit(x)
        return special.stdtr(self.df, x)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.name == 'normal':
            return norm_pdf(x)
        elif self.name == 'logistic':
            p = special.expit(x)
            return p * (1 - p)
        v = self.df
        logc = (special.gammaln((v + 1) / 2) - special.gammaln(v / 2) -
                0.5 * np.log(v * np.pi))
        return np.exp(logc - (v + 1) / 2 * np.log1p(x * x / v))

    def ppf(self, u):
        if self.name == 'normal':
            return norm_ppf(u)
        elif self.name == 'logistic':
            return special.logit(u)
        return special.stdtrit(self.df, u)

    @property
    def variance(self):
        if self.name == 'normal':
            return 1.
        elif self.name == 'logistic':
            return np.pi**2 / 3
        if self.df <= 2:
            return np.inf
        return self.df / (self.df - 2.)

    def __repr__(self):
        if self.name == 't':
            return 'TransformG(t, df=%r)' % self.df
        return 'TransformG(%s)' % self.name


transforms = {
    'normal': TransformG('normal'),
    't3': TransformG('t', 3),
    'logistic': TransformG('logistic'),
}


def get_transform(g):
    """按名字取G：normal、t3、logistic
    """
    if isinstance(g, TransformG):
        return g
    name = str(g).lower()
    if name not in transforms:
        raise DomainError('unknown transformation %r, expected one of %s' %
                          (g, sorted(transforms)))
    return transforms[name]


def transform_name(g):
    g = get_transform(g)
    for k, v in transforms.items():
        if v is g:
            return k
    return repr(g)


class Marginal(object):
    """边缘分布基类
    free参数向量通过params/with_params读写，cdf_jac给出F关于
    free参数的导数，供似然梯度使用。
    """
    def cdf(self, x):
        raise NotImplementedError

    def pdf(self, x):
        raise NotImplementedError

    def ppf(self, u):
        """默认用二分法求分位数
        """
        u = check_finite('u', u)
        if np.any((u <= 0) | (u >= 1)):
            raise DomainError('quantile argument must lie in (0, 1)')
        lo, hi = -1., 1.
        while np.any(self.cdf(lo) > u) and lo > -1e6:
            lo *= 2
        while np.any(self.cdf(hi) < u) and hi < 1e6:
            hi *= 2
        return bisect(self.cdf, u, lo, hi, tol=1e-12)

    def density(self, x):
        return self.pdf(x)

    def quantile(self, u):
        return self.ppf(u)

    @property
    def n_params(self):
        return len(self.params)

    @property
    def params(self):
        return np.zeros(0)

    def with_params(self, params):
        assert len(params) == 0, 'marginal has no free parameters'
        return self

    def param_names(self, prefix):
        return []

    def bounds(self):
        return []

    def cdf_jac(self, x):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape + (0,))


class LocationScale(Marginal):
    """F(x) = G((x - loc) / scale)，free时参数为(loc, log scale)
    """
    def __init__(self, base='normal', loc=0., scale=1., free=True):
        self.base = get_transform(base)
        self.loc = float(loc)
        self.scale = float(scale)
        self.free = free
        if not self.scale > 0:
            raise DomainError('scale must be positive, got %r' % scale)

    def _z(self, x):
        return (check_finite('x', x) - self.loc) / self.scale

    def cdf(self, x):
        return self.base.cdf(self._z(x))

    def pdf(self, x):
        return self.base.pdf(self._z(x)) / self.scale

    def ppf(self, u):
        return self.loc + self.scale * self.base.ppf(u)

    @property
    def params(self):
        if not self.free:
            return np.zeros(0)
        return np.array([self.loc, np.log(self.scale)])

    def with_params(self, params):
        if not self.free:
            return Marginal.with_params(self, params)
        loc, log_scale = params
        return LocationScale(self.base, loc, np.exp(log_scale), True)

    def param_names(self, prefix):
        if not self.free:
            return []
        return ['%s:loc' % prefix, '%s:log_scale' % prefix]

    def bounds(self):
        if not self.free:
            return []
        return [(-50., 50.), (-10., 10.)]

    def cdf_jac(self, x):
        z = self._z(x)
        if not self.free:
            return np.zeros(z.shape + (0,))
        g = self.base.pdf(z)
        return np.stack([-g / self.scale, -g * z], axis=-1)

    def to_dict(self):
        return {'law': 'location-scale', 'base': transform_name(self.base),
                'loc': self.loc, 'scale': self.scale}


def Normal(mu=0., sigma=1., free=True):
    """正态边缘N(mu, sigma^2)
    """
    return LocationScale('normal', mu, sigma, free)


def StudentT(df, loc=0., scale=1., free=False):
    """t(df)边缘
    """
    if not df > 0:
        raise DomainError('df must be positive, got %r' % df)
    return LocationScale(TransformG('t', float(df)), loc, scale, free)


def standardized(base):
    """均值0、方差1的G族分布，MeanVarUnit归一化使用
    """
    base = get_transform(base)
    sd = np.sqrt(base.variance)
    if not np.isfinite(sd):
        raise DomainError('%r has no finite variance' % base)
    return LocationScale(base, 0., 1. / sd, free=False)


class NormalMixture(Marginal):
    """正态混合分布
    standardized=True时除以混合分布的标准差并减去均值，使其
    均值为0、方差为1。
    """
    def __init__(self, weights, means, sigmas, standardized=True):
        self.weights = np.asarray(weights, dtype=float)
        self.means = np.asarray(means, dtype=float)
        self.sigmas = np.broadcast_to(np.asarray(sigmas, dtype=float),
                                      self.weights.shape).copy()
        assert self.weights.shape == self.means.shape, 'shape mismatch'
        if np.any(self.weights <= 0) or abs(self.weights.sum() - 1) > 1e-12:
            raise DomainError('mixture weights must be positive and sum to 1')
        if np.any(self.sigmas <= 0):
            raise DomainError('component sigmas must be positive')
        self.standardized = standardized
        if standardized:
            m = self.weights.dot(self.means)
            v = self.weights.dot(self.sigmas**2 + self.means**2) - m**2
            self.center, self.sd = m, np.sqrt(v)
        else:
            self.center, self.sd = 0., 1.

    def _raw(self, x):
        return check_finite('x', x) * self.sd + self.center

    def cdf(self, x):
        y = self._raw(x)[..., None]
        return norm_cdf((y - self.means) / self.sigmas).dot(self.weights)

    def pdf(self, x):
        y = self._raw(x)[..., None]
        dens = norm_pdf((y - self.means) / self.sigmas) / self.sigmas
        return self.sd * dens.dot(self.weights)

    def to_dict(self):
        return {'law': 'normal-mixture', 'weights': self.weights,
                'means': self.means, 'sigmas': self.sigmas,
                'standardized': self.standardized}


def calibrate_mixture(target_ate,
                      delta1,
                      weights=(0.6, 0.4),
                      means=(-1., 1.5),
                      sigma_range=(1e-3, 50.)):
    """求公共分量标准差σ，使标准化混合分布满足F(δ₁) - F(0) = target_ate
    """
    weights = np.asarray(weights, dtype=float)
    means = np.asarray(means, dtype=float)

    def ate(sigma):
        law = NormalMixture(weights, means, sigma, True)
        return float(law.cdf(delta1) - law.cdf(0.))

    if len(weights) == 1:
        # 单分量标准化后就是N(0,1)，与σ无关
        if abs(ate(1.) - target_ate) < 1e-5:
            return NormalMixture([1.], [0.], [1.], True)
        raise NoRootError('target %r is not reachable by a single normal' %
                          target_ate)

    grid = np.geomspace(sigma_range[0], sigma_range[1], 200)
    values = np.array([ate(s) for s in grid]) - target_ate
    change = np.flatnonzero(np.sign(values[:-1]) != np.sign(values[1:]))
    if len(change) == 0:
        raise NoRootError(
            'target ATE %r is outside the reachable range [%.4f, %.4f]' %
            (target_ate, values.min() + target_ate,
             values.max() + target_ate))
    i = change[0]
    f = lambda s: ate(s) - target_ate
    sigma = brentq(f, grid[i], grid[i + 1], xtol=1e-14)
    return NormalMixture(weights, means, sigma, True)


class SieveMarginal(Marginal):
    """F(x) = H(G(x))，h(t) = p(t)^2 / ∫₀¹p^2，p(t) = Σ a_k ψ_k(t)
    ψ_k(t) = √(2k+1) P_k(2t-1)是[0,1]上的标准正交Legendre多项式，
    所以∫₀¹p^2 = Σ a_k^2。系数规范化为a₀=1，free参数为a₁..a_k。
    平方与积分都在Legendre级数上精确计算。
    """
    def __init__(self, g='normal', coeffs=(1.,)):
        self.g = get_transform(g)
        a = check_finite('coeffs', coeffs).ravel()
        if len(a) == 0 or a[0] == 0:
            raise DomainError('sieve coefficient a0 must be nonzero')
        self.coeffs = a / a[0]
        self.order = len(a) - 1
        self._scale = np.sqrt(2. * np.arange(self.order + 1) + 1)
        series = self.coeffs * self._scale
        self._norm = float(self.coeffs.dot(self.coeffs))
        self._square = L.legmul(series, series)
        self._integral = L.legint(self._square, lbnd=-1, scl=0.5)
        # ∫₀^t p ψ_j，H_jac使用
        self._cross = []
        for j in range(1, self.order + 1):
            basis = np.zeros(j + 1)
            basis[j] = self._scale[j]
            self._cross.append(
                L.legint(L.legmul(series, basis), lbnd=-1, scl=0.5))

    def h(self, t):
        """[0,1]上的筛密度
        """
        s = 2 * np.asarray(t, dtype=float) - 1
        return L.legval(s, self._square) / self._norm

    def H(self, t):
        """[0,1]上的筛分布函数
        """
        s = 2 * np.asarray(t, dtype=float) - 1
        return np.clip(L.legval(s, self._integral) / self._norm, 0, 1)

    def total_mass(self):
        return float(L.legval(1., self._integral) / self._norm)

    def cdf(self, x):
        return self.H(self.g.cdf(check_finite('x', x)))

    def pdf(self, x):
        x = check_finite('x', x)
        return self.h(self.g.cdf(x)) * self.g.pdf(x)

    def ppf(self, u):
        u = check_finite('u', u)
        if np.any((u <= 0) | (u >= 1)):
            raise DomainError('quantile argument must lie in (0, 1)')
        if self.order == 0:
            return self.g.ppf(u)
        t = bisect(self.H, u, 0., 1., tol=1e-15, max_iter=60)
        return self.g.ppf(np.clip(t, 1e-300, 1 - 1e-16))

    @property
    def params(self):
        return self.coeffs[1:].copy()

    def with_params(self, params):
        return SieveMarginal(self.g, np.concatenate([[1.], params]))

    def with_order(self, k):
        """截断或补零到k阶，用于逐阶热启动
        """
        a = np.zeros(int(k) + 1)
        m = min(int(k), self.order) + 1
        a[:m] = self.coeffs[:m]
        return SieveMarginal(self.g, a)

    def param_names(self, prefix):
        return ['%s:a%d' % (prefix, j) for j in range(1, self.order + 1)]

    def bounds(self):
        return [(-sieve_bound, sieve_bound)] * self.order

    def H_jac(self, t):
        """H(t)关于a₁..a_k的导数
        ∂H/∂a_j = 2(∫₀^t p ψ_j - H(t) a_j) / Σa²
        """
        t = np.asarray(t, dtype=float)
        if not self._cross:
            return np.zeros(t.shape + (0,))
        s = 2 * t - 1
        Ht = L.legval(s, self._integral) / self._norm
        cols = [2 * (L.legval(s, cross) - Ht * self.coeffs[j + 1]) /
                self._norm for j, cross in enumerate(self._cross)]
        return np.stack(cols, axis=-1)

    def cdf_jac(self, x):
        return self.H_jac(self.g.cdf(check_finite('x', x)))

    def to_dict(self):
        return {'law': 'sieve', 'g': transform_name(self.g),
                'order': self.order, 'basis': 'legendre',
                'coeffs': self.coeffs}


def _order_rate(policy, p):
    if policy == 'auto':
        return 1. / 7
    elif policy == 'theory':
        return 1. / (2 * p + 1)
    raise DomainError('unknown sieve order policy %r' % policy)


def sieve_order(n, policy='auto', p=3, c=None):
    """筛阶数k_n
    auto: k_n = round(c n^{1/7})，默认c使n=500时k_n=2；
    theory: k_n = round(c n^{1/(2p+1)})，默认c同样使n=500时k_n=2。
    """
    rate = _order_rate(policy, p)
    if c is None:
        c = sieve_constant(2, 500, policy, p)
    return max(0, int(np.floor(c * float(n)**rate + 0.5)))


def sieve_constant(k, n=500, policy='auto', p=3):
    """使sieve_order(n) = k的比例常数c
    """
    return float(k) / float(n)**_order_rate(policy, p)


def density(marginal, x):
    return marginal.pdf(x)


def cdf(marginal, x):
    return marginal.cdf(x)
