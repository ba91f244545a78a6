# -*- coding: utf-8 -*-
# 似然函数：数据集、参数包、四格概率、加权对数似然及其解析梯度

import numpy as np
from copula4probit.copulas import get_copula, DependenceParam
from copula4probit.marginals import Marginal
from copula4probit.snippets import DomainError, DataError

# 概率下限与指标截断
prob_floor = 1e-12
index_clip = 1e-15


class Dataset(object):
    """观测{Y, D, X, Z}
    x、z为二维数组（n×k、n×l），列名用于输出与归一化。
    """
    def __init__(self, y, d, x, z, x_names=None, z_names=None):
        y = np.asarray(y, dtype=float).ravel()
        d = np.asarray(d, dtype=float).ravel()
        n = len(y)
        if n < 1:
            raise DataError('dataset must contain at least one row')
        x = np.asarray(x, dtype=float).reshape(n, -1)
        z = np.asarray(z, dtype=float).reshape(n, -1)
        if len(d) != n:
            raise DataError('y and d have different lengths')
        for name, v in [('y', y), ('d', d), ('x', x), ('z', z)]:
            if not np.all(np.isfinite(v)):
                raise DataError('column block %s has missing values' % name)
        for name, v in [('y', y), ('d', d)]:
            if not np.all((v == 0) | (v == 1)):
                raise DataError('%s must be binary 0/1' % name)
        self.y, self.d = y.astype(int), d.astype(int)
        self.x, self.z = x, z
        self.x_names = list(x_names or ['x%d' % (i + 1)
                                        for i in range(x.shape[1])])
        self.z_names = list(z_names or ['z%d' % (i + 1)
                                        for i in range(z.shape[1])])
        assert len(self.x_names) == x.shape[1], 'x_names length mismatch'
        assert len(self.z_names) == z.shape[1], 'z_names length mismatch'

    @property
    def n(self):
        return len(self.y)

    @property
    def cells(self):
        """观测所在的格：0=(1,1)，1=(1,0)，2=(0,1)，3=(0,0)
        """
        return 2 * (1 - self.y) + (1 - self.d)

    def with_constant(self, name='const'):
        """在x前加一列常数（MeanVarUnit归一化需要截距）
        """
        if name in self.x_names:
            return self
        x = np.hstack([np.ones((self.n, 1)), self.x])
        return Dataset(self.y, self.d, x, self.z, [name] + self.x_names,
                       self.z_names)

    def take(self, index):
        index = np.asarray(index)
        return Dataset(self.y[index], self.d[index], self.x[index],
                       self.z[index], self.x_names, self.z_names)

    def x_means(self):
        return self.x.mean(axis=0)

    @classmethod
    def from_frame(cls, frame, y, d, x, z):
        """从pandas.DataFrame按列名构造
        """
        columns = [y, d] + list(x) + list(z)
        missing = [c for c in columns if c not in frame.columns]
        if missing:
            raise DataError('missing column(s): %s' % ', '.join(missing))
        x, z = list(x), list(z)
        return cls(frame[y].values, frame[d].values,
                   frame[x].values.reshape(len(frame), len(x)),
                   frame[z].values.reshape(len(frame), len(z)), x, z)

    @classmethod
    def from_csv(cls, path, y, d, x, z):
        import pandas as pd
        return cls.from_frame(pd.read_csv(path), y, d, x, z)

    def to_frame(self):
        import pandas as pd
        data = {'y': self.y, 'd': self.d}
        for j, name in enumerate(self.x_names):
            data[name] = self.x[:, j]
        for j, name in enumerate(self.z_names):
            data[name] = self.z[:, j]
        return pd.DataFrame(data, columns=['y', 'd'] + self.x_names +
                            self.z_names)


class Normalization(object):
    """尺度归一化
    mean-var-unit: 两个边缘固定为均值0方差1，截距自由；
    fixed-coefficient: 没有截距，α、β中指定系数固定（如-1）。
    """
    schemes = ('mean-var-unit', 'fixed-coefficient')

    def __init__(self, scheme='fixed-coefficient', fixed_alpha=None,
                 fixed_beta=None):
        if scheme not in self.schemes:
            raise DomainError('unknown normalization %r' % scheme)
        self.scheme = scheme
        self.fixed_alpha = dict(fixed_alpha or {})
        self.fixed_beta = dict(fixed_beta or {})
        if scheme == 'mean-var-unit':
            assert not (self.fixed_alpha or self.fixed_beta), \
                'mean-var-unit normalization pins no coefficients'

    @classmethod
    def mean_var_unit(cls):
        return cls('mean-var-unit')

    @classmethod
    def fixed_coefficient(cls, alpha=None, beta=None):
        return cls('fixed-coefficient', alpha, beta)

    @property
    def is_fixed(self):
        return self.scheme == 'fixed-coefficient'

    def pinned(self, names, which):
        """返回{列序号: 固定值}
        """
        fixed = self.fixed_alpha if which == 'alpha' else self.fixed_beta
        out = {}
        for key, value in fixed.items():
            if isinstance(key, str):
                if key not in names:
                    raise DomainError('pinned column %r not in x' % key)
                key = names.index(key)
            out[int(key)] = float(value)
        return out

    def to_dict(self):
        return {'scheme': self.scheme,
                'fixed_alpha': {str(k): v for k, v in self.fixed_alpha.items()},
                'fixed_beta': {str(k): v for k, v in self.fixed_beta.items()}}


class Theta(object):
    """全部参数：ψ=(α, β, δ₁, γ, ρ)以及两个边缘分布
    固定的系数不进入free参数向量；free向量中ρ以无约束尺度η出现。
    """
    def __init__(self,
                 alpha,
                 beta,
                 delta1,
                 gamma,
                 rho,
                 marg_eps,
                 marg_nu,
                 copula=None,
                 normalization=None,
                 x_names=None,
                 z_names=None):
        self.alpha = np.atleast_1d(np.asarray(alpha, dtype=float)).copy()
        self.beta = np.atleast_1d(np.asarray(beta, dtype=float)).copy()
        self.gamma = np.atleast_1d(np.asarray(gamma, dtype=float)).copy()
        self.delta1 = float(delta1)
        if isinstance(rho, DependenceParam):
            copula, rho = rho.family, rho.rho
        self.copula = get_copula(copula or 'gaussian')
        self.rho = self.copula.check(rho)
        assert isinstance(marg_eps, Marginal), 'marg_eps must be a Marginal'
        assert isinstance(marg_nu, Marginal), 'marg_nu must be a Marginal'
        self.marg_eps, self.marg_nu = marg_eps, marg_nu
        self.normalization = normalization or Normalization()
        k, l = len(self.alpha), len(self.gamma)
        if len(self.beta) != k:
            raise DomainError('alpha and beta must have the same length')
        self.x_names = list(x_names or ['x%d' % (i + 1) for i in range(k)])
        self.z_names = list(z_names or ['z%d' % (i + 1) for i in range(l)])
        self._check_normalization()

    def _check_normalization(self):
        norm = self.normalization
        for which, coef in [('alpha', self.alpha), ('beta', self.beta)]:
            for j, value in norm.pinned(self.x_names, which).items():
                if j >= len(coef):
                    raise DomainError('pinned index %d out of range' % j)
                if coef[j] != value:
                    raise DomainError('%s[%d]=%r violates the pinned value %r'
                                      % (which, j, coef[j], value))
        if not norm.is_fixed and (self.marg_eps.n_params or
                                  self.marg_nu.n_params):
            raise DomainError('mean-var-unit normalization requires fixed '
                              'standardized marginals')

    @property
    def dependence(self):
        return DependenceParam(self.copula, self.rho)

    def replace(self, **kwargs):
        """返回修改部分字段后的新参数包
        """
        fields = dict(alpha=self.alpha, beta=self.beta, delta1=self.delta1,
                      gamma=self.gamma, rho=self.rho, marg_eps=self.marg_eps,
                      marg_nu=self.marg_nu, copula=self.copula,
                      normalization=self.normalization,
                      x_names=self.x_names, z_names=self.z_names)
        fields.update(kwargs)
        return Theta(**fields)

    def free_index(self, which):
        pinned = self.normalization.pinned(self.x_names, which)
        return [j for j in range(len(self.alpha)) if j not in pinned]

    def blocks(self):
        """free向量的分块：alpha、beta、delta1、gamma、eta、eps、nu
        """
        sizes = [('alpha', len(self.free_index('alpha'))),
                 ('beta', len(self.free_index('beta'))),
                 ('delta1', 1),
                 ('gamma', len(self.gamma)),
                 ('eta', 1),
                 ('eps', self.marg_eps.n_params),
                 ('nu', self.marg_nu.n_params)]
        out, start = {}, 0
        for name, size in sizes:
            out[name] = slice(start, start + size)
            start += size
        return out

    @property
    def n_free(self):
        return self.blocks()['nu'].stop

    def psi_slice(self):
        """ψ部分（有限维参数）在free向量中的位置
        """
        return slice(0, self.blocks()['eta'].stop)

    def free_vector(self):
        return np.concatenate([
            self.alpha[self.free_index('alpha')],
            self.beta[self.free_index('beta')],
            [self.delta1],
            self.gamma,
            [self.copula.to_unconstrained(self.rho)],
            self.marg_eps.params,
            self.marg_nu.params,
        ])

    def with_free(self, vector):
        vector = np.asarray(vector, dtype=float)
        assert len(vector) == self.n_free, 'free vector length mismatch'
        b = self.blocks()
        alpha, beta = self.alpha.copy(), self.beta.copy()
        alpha[self.free_index('alpha')] = vector[b['alpha']]
        beta[self.free_index('beta')] = vector[b['beta']]
        return self.replace(
            alpha=alpha,
            beta=beta,
            delta1=vector[b['delta1']][0],
            gamma=vector[b['gamma']],
            rho=self.copula.from_unconstrained(vector[b['eta']][0]),
            marg_eps=self.marg_eps.with_params(vector[b['eps']]),
            marg_nu=self.marg_nu.with_params(vector[b['nu']]))

    def free_names(self):
        fa, fb = self.free_index('alpha'), self.free_index('beta')
        return (['alpha:%s' % self.x_names[j] for j in fa] +
                ['beta:%s' % self.x_names[j] for j in fb] + ['delta1'] +
                ['gamma:%s' % n for n in self.z_names] + ['eta'] +
                self.marg_eps.param_names('eps') +
                self.marg_nu.param_names('nu'))

    def free_bounds(self, bound=50.):
        n_coef = self.blocks()['eta'].start
        return ([(-bound, bound)] * n_coef + [self.copula.eta_bounds] +
                self.marg_eps.bounds() + self.marg_nu.bounds())

    def drho_deta(self):
        return self.copula.drho_deta(self.copula.to_unconstrained(self.rho))

    def to_dict(self):
        return {
            'alpha': dict(zip(self.x_names, self.alpha)),
            'beta': dict(zip(self.x_names, self.beta)),
            'delta1': self.delta1,
            'gamma': dict(zip(self.z_names, self.gamma)),
            'copula': self.copula.name,
            'rho': self.rho,
            'rho_sp': self.copula.spearman_rho(self.rho),
            'marg_eps': self.marg_eps.to_dict(),
            'marg_nu': self.marg_nu.to_dict(),
            'normalization': self.normalization.to_dict(),
        }


class CellProbs(object):
    """四格概率p11、p10、p01、p00（可为数组）
    """
    def __init__(self, p11, p10, p01, p00):
        self.p11, self.p10, self.p01, self.p00 = p11, p10, p01, p00

    def as_array(self):
        return np.stack([self.p11, self.p10, self.p01, self.p00], axis=-1)

    def __iter__(self):
        return iter((self.p11, self.p10, self.p01, self.p00))


def probs_from_indices(r0, r1, s, cdf):
    """由r0=F_ε(x'β)、r1=F_ε(x'β+δ₁)、s=F_ν(x'α+z'γ)和copula分布
    函数cdf(u1, u2)得到未截断的四格概率(p11, p10, p01, p00)
    """
    c1, c0 = cdf(r1, s), cdf(r0, s)
    return np.stack([c1, r0 - c0, s - c1, 1 - r0 - s + c0], axis=-1)


def floor_probs(p):
    """下限截断后重新归一化
    """
    p = np.maximum(p, prob_floor)
    return p / p.sum(axis=-1, keepdims=True)


def _check_dims(theta, x, z):
    if x.shape[-1] != len(theta.alpha):
        raise DomainError('x has %d columns, theta expects %d' %
                          (x.shape[-1], len(theta.alpha)))
    if z.shape[-1] != len(theta.gamma):
        raise DomainError('z has %d columns, theta expects %d' %
                          (z.shape[-1], len(theta.gamma)))


def _indices(theta, x, z):
    out0 = x.dot(theta.beta)
    return out0, out0 + theta.delta1, x.dot(theta.alpha) + z.dot(theta.gamma)


def _clip(u):
    return np.clip(u, index_clip, 1 - index_clip)


def cell_probs(theta, x, z):
    """四格概率，x、z可为单个协变量向量或n×k、n×l数组
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    z = np.atleast_1d(np.asarray(z, dtype=float))
    _check_dims(theta, x, z)
    out0, out1, sel = _indices(theta, x, z)
    r0 = _clip(theta.marg_eps.cdf(out0))
    r1 = _clip(theta.marg_eps.cdf(out1))
    s = _clip(theta.marg_nu.cdf(sel))
    cdf = lambda u, v: theta.copula.cdf(u, v, theta.rho)
    p = floor_probs(probs_from_indices(r0, r1, s, cdf))
    return CellProbs(*np.moveaxis(p, -1, 0))


def _check_weights(weights, n):
    if weights is None:
        return np.ones(n)
    weights = np.asarray(weights, dtype=float).ravel()
    if len(weights) != n:
        raise DomainError('weights have length %d, dataset has %d rows' %
                          (len(weights), n))
    if not np.all(weights > 0):
        raise DomainError('weights must be positive')
    return weights


def evaluate(theta, dataset, scores=True):
    """逐观测的对数概率，以及（可选）逐观测的free参数得分矩阵
    梯度使用截断前的概率导数除以截断后的概率。
    """
    x, z = dataset.x, dataset.z
    _check_dims(theta, x, z)
    out0, out1, sel = _indices(theta, x, z)
    me, mn, cop, rho = theta.marg_eps, theta.marg_nu, theta.copula, theta.rho
    r0, r1, s = _clip(me.cdf(out0)), _clip(me.cdf(out1)), _clip(mn.cdf(sel))
    cdf = lambda u, v: cop.cdf(u, v, rho)
    p = floor_probs(probs_from_indices(r0, r1, s, cdf))
    cells = dataset.cells
    rows = np.arange(dataset.n)
    p_obs = p[rows, cells]
    logp = np.log(p_obs)
    if not scores:
        return logp, None

    # 观测格关于(r1, r0, s, rho)的导数系数
    a1, b1, g1 = cop.partials(r1, s, rho)
    a0, b0, g0 = cop.partials(r0, s, rho)
    zero = np.zeros_like(a1)
    c_r1 = np.choose(cells, [a1, zero, -a1, zero])
    c_r0 = np.choose(cells, [zero, 1 - a0, zero, a0 - 1])
    c_s = np.choose(cells, [b1, -b0, 1 - b1, b0 - 1])
    c_rho = np.choose(cells, [g1, -g0, -g1, g0])

    f0, f1, fs = me.pdf(out0), me.pdf(out1), mn.pdf(sel)
    fa, fb = theta.free_index('alpha'), theta.free_index('beta')
    d_out = c_r1 * f1 + c_r0 * f0
    d_sel = c_s * fs
    columns = [
        d_sel[:, None] * x[:, fa],
        d_out[:, None] * x[:, fb],
        (c_r1 * f1)[:, None],
        d_sel[:, None] * z,
        (c_rho * theta.drho_deta())[:, None],
        c_r1[:, None] * me.cdf_jac(out1) + c_r0[:, None] * me.cdf_jac(out0),
        c_s[:, None] * mn.cdf_jac(sel),
    ]
    return logp, np.hstack(columns) / p_obs[:, None]


def loglik(theta, dataset, weights=None):
    """(1/n)Σ w_i log p_{Y_i D_i}(X_i, Z_i; θ)
    """
    weights = _check_weights(weights, dataset.n)
    logp = evaluate(theta, dataset, scores=False)[0]
    return float(np.sum(weights * logp) / dataset.n)


def loglik_scores(theta, dataset):
    """逐观测得分矩阵（n × free参数个数）
    """
    return evaluate(theta, dataset)[1]


def loglik_grad(theta, dataset, weights=None):
    """对数似然关于free参数的解析梯度
    """
    weights = _check_weights(weights, dataset.n)
    scores = evaluate(theta, dataset)[1]
    return np.sum(weights[:, None] * scores, axis=0) / dataset.n


def loglik_and_grad(theta, dataset, weights=None):
    weights = _check_weights(weights, dataset.n)
    logp, scores = evaluate(theta, dataset)
    value = float(np.sum(weights * logp) / dataset.n)
    return value, np.sum(weights[:, None] * scores, axis=0) / dataset.n
