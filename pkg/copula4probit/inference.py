# -*- coding: utf-8 -*-
# 统计推断：有效得分方差、ATE方差、加权bootstrap

import logging
import numpy as np
from copula4probit.backend import norm_ppf, default_threads
from copula4probit.likelihood import loglik_scores
from copula4probit.estimators import FitOptions, fit_model, ate
from copula4probit.snippets import DomainError, ConvergenceError
from copula4probit.snippets import ordered_map

logger = logging.getLogger(__name__)

# 超过这个比例的bootstrap重估失败则终止
max_failure_rate = 0.1


def _prepared(fit, dataset=None):
    if dataset is None:
        return fit.dataset
    if not fit.spec.normalization.is_fixed:
        dataset = dataset.with_constant()
    return dataset


def _native_scores(theta, dataset):
    """逐观测得分，η列换成ρ原生尺度
    """
    scores = loglik_scores(theta, dataset).copy()
    eta = theta.blocks()['eta']
    drho = theta.drho_deta()
    if not drho > 0:
        raise DomainError('rho=%r sits on the boundary of its domain' %
                          theta.rho)
    scores[:, eta] /= drho
    return scores


def _psi_names(theta):
    names = theta.free_names()[theta.psi_slice()]
    return ['rho' if n == 'eta' else n for n in names]


class EfficientScoreFit(object):
    """有效得分投影的结果
    b_eps、b_nu为ψ得分在两组边缘方向上的投影系数（每列对应一个ψ分量），
    information为Î_*，covariance = Î_*⁻¹ / n。
    """
    def __init__(self, names, b_eps, b_nu, information, covariance,
                 min_eigenvalue, orthogonality, n_obs):
        self.names = names
        self.b_eps = b_eps
        self.b_nu = b_nu
        self.information = information
        self.covariance = covariance
        self.min_eigenvalue = min_eigenvalue
        self.orthogonality = orthogonality
        self.n_obs = n_obs

    @property
    def se(self):
        return np.sqrt(np.maximum(np.diag(self.covariance), 0.))

    def se_of(self, name):
        if name not in self.names:
            raise DomainError('unknown parameter %r' % name)
        return float(self.se[self.names.index(name)])

    def to_dict(self):
        return {'names': self.names, 'se': self.se,
                'min_eigenvalue': self.min_eigenvalue,
                'orthogonality': self.orthogonality,
                'information': self.information}


def efficient_score_variance(fit, dataset=None):
    """把ψ的得分对边缘分布方向做最小二乘投影，用残差的外积估计Î_*
    参数模型中边缘方向是位置、尺度参数；没有边缘参数时即OPG。
    """
    theta = fit.theta_hat
    data = _prepared(fit, dataset)
    scores = _native_scores(theta, data)
    blocks = theta.blocks()
    psi = scores[:, theta.psi_slice()]
    n_eps = blocks['eps'].stop - blocks['eps'].start
    nuisance = scores[:, blocks['eps'].start:blocks['nu'].stop]
    if nuisance.shape[1]:
        b = np.linalg.lstsq(nuisance, psi, rcond=None)[0]
        resid = psi - nuisance.dot(b)
        orthogonality = float(np.max(np.abs(nuisance.T.dot(resid))) / data.n)
    else:
        b = np.zeros((0, psi.shape[1]))
        resid, orthogonality = psi, 0.
    info = resid.T.dot(resid) / data.n
    info = (info + info.T) / 2
    eig = np.linalg.eigvalsh(info)
    if not eig[0] > 1e-12 * max(eig[-1], 1.):
        raise DomainError('efficient information is singular, min '
                          'eigenvalue %.3e' % eig[0])
    cov = np.linalg.inv(info) / data.n
    return EfficientScoreFit(_psi_names(theta), b[:n_eps], b[n_eps:], info,
                             (cov + cov.T) / 2, float(eig[0]), orthogonality,
                             data.n)


def ate_gradient(theta, x):
    """ATE关于free参数向量的梯度
    """
    x = np.asarray(x, dtype=float)
    if x.shape != theta.beta.shape:
        raise DomainError('x has %d entries, beta has %d' %
                          (x.size, len(theta.beta)))
    me = theta.marg_eps
    out0 = x.dot(theta.beta)
    out1 = out0 + theta.delta1
    f0, f1 = float(me.pdf(out0)), float(me.pdf(out1))
    b = theta.blocks()
    grad = np.zeros(theta.n_free)
    grad[b['beta']] = (f1 - f0) * x[theta.free_index('beta')]
    grad[b['delta1']] = f1
    grad[b['eps']] = me.cdf_jac(out1) - me.cdf_jac(out0)
    return grad


def ate_directional_derivative(theta, x, v):
    """∂ATE/∂θ[v]：f(x'β+δ₁)(x'v_β+v_δ) - f(x'β)x'v_β加上边缘方向的积分项
    """
    v = np.asarray(v, dtype=float)
    assert v.shape == (theta.n_free,), 'direction has the wrong length'
    return float(ate_gradient(theta, x).dot(v))


def ate_variance(fit, x=None, dataset=None):
    """ATE的渐近方差 ∇ᵀ I⁻¹ ∇ / n，I为free参数的OPG信息矩阵
    这是筛空间上sup_v (∂ATE[v])² / ‖v‖²的闭式解。
    """
    theta = fit.theta_hat
    data = _prepared(fit, dataset)
    if x is None:
        x = data.x_means()
    grad = ate_gradient(theta, x)
    scores = loglik_scores(theta, data)
    info = scores.T.dot(scores) / data.n
    try:
        w = np.linalg.solve(info, grad)
    except np.linalg.LinAlgError:
        raise DomainError('information matrix is singular')
    return max(float(grad.dot(w)) / data.n, 0.)


def spearman_se(fit, rho_se, step=1e-5):
    """ρ_sp的delta方法标准误
    """
    cop, rho = fit.theta_hat.copula, fit.theta_hat.rho
    eta = cop.to_unconstrained(rho)
    hi = cop.from_unconstrained(eta + step)
    lo = cop.from_unconstrained(eta - step)
    slope = (cop.spearman_rho(hi) - cop.spearman_rho(lo)) / (hi - lo)
    return abs(slope) * rho_se


def standard_errors(fit, x=None, dataset=None):
    """渐近标准误汇总：ψ各分量、ρ_sp、ATE
    """
    esv = efficient_score_variance(fit, dataset)
    out = dict(zip(esv.names, esv.se))
    out['rho_sp'] = spearman_se(fit, out['rho'])
    out['ate'] = np.sqrt(ate_variance(fit, x, dataset))
    return out


def evaluate_target(theta, name, x=None):
    """按名字取目标量：gamma、delta1、rho、rho_sp、ate，
    或alpha:<列名>、beta:<列名>、gamma:<列名>
    """
    if name == 'delta1':
        return theta.delta1
    if name == 'rho':
        return theta.rho
    if name == 'rho_sp':
        return theta.copula.spearman_rho(theta.rho)
    if name == 'ate':
        if x is None:
            x = np.zeros(len(theta.beta))
        return ate(theta, x)
    if name == 'gamma':
        return float(theta.gamma[0])
    which, _, column = name.partition(':')
    names = theta.z_names if which == 'gamma' else theta.x_names
    if which not in ('alpha', 'beta', 'gamma') or column not in names:
        raise DomainError('unknown target %r' % name)
    return float(getattr(theta, which)[names.index(column)])


def percentile_interval(values, level=0.95):
    """最近次序统计量的百分位区间[Q(p/2), Q(1-p/2)]，p = 1 - level
    Q(τ)取排序后第floor(τ(B-1) + 0.5)个值。
    """
    values = np.sort(np.asarray(values, dtype=float), axis=0)
    assert len(values) >= 1, 'no values'
    if not 0 < level < 1:
        raise DomainError('level must lie in (0, 1)')
    p = 1 - level
    last = len(values) - 1
    lo = int(np.floor(p / 2 * last + 0.5))
    hi = int(np.floor((1 - p / 2) * last + 0.5))
    return values[lo], values[hi]


def draw_weights(rng, n, law='exp', variance=1.):
    """均值为1的正权重：exp(1)、方差为variance的gamma，或全1
    """
    if law == 'exp':
        return rng.exponential(1., n)
    if law == 'gamma':
        return rng.gamma(1. / variance, variance, n)
    if law == 'ones':
        return np.ones(n)
    raise DomainError('unknown weight law %r' % law)


class BootstrapResult(object):
    """加权bootstrap结果
    estimates为(B_ok, 目标个数)矩阵，se按1/B的总体标准差计算。
    """
    def __init__(self, targets, point, estimates, levels, n_failed, seed,
                 weight_law):
        self.targets = list(targets)
        self.point = np.asarray(point, dtype=float)
        self.estimates = np.asarray(estimates, dtype=float)
        self.levels = tuple(levels)
        self.n_failed = n_failed
        self.seed = seed
        self.weight_law = weight_law
        self.se = self.estimates.std(axis=0)
        self.pci, self.normal_ci = {}, {}
        for level in self.levels:
            self.pci[level] = percentile_interval(self.estimates, level)
            z = norm_ppf(0.5 + level / 2)
            self.normal_ci[level] = (self.point - z * self.se,
                                     self.point + z * self.se)

    @property
    def B(self):
        return len(self.estimates)

    def interval(self, target, level=0.95, kind='percentile'):
        j = self.targets.index(target)
        ci = self.pci if kind == 'percentile' else self.normal_ci
        return float(ci[level][0][j]), float(ci[level][1][j])

    def to_dict(self):
        out = {'B': self.B, 'n_failed': self.n_failed, 'seed': self.seed,
               'weight_law': self.weight_law, 'targets': {}}
        for j, t in enumerate(self.targets):
            out['targets'][t] = {
                'estimate': self.point[j],
                'se': self.se[j],
                'pci': {str(l): [self.pci[l][0][j], self.pci[l][1][j]]
                        for l in self.levels},
                'normal_ci': {str(l): [self.normal_ci[l][0][j],
                                       self.normal_ci[l][1][j]]
                              for l in self.levels},
            }
        return out


class _BootstrapTask(object):
    """第b次bootstrap：权重流由(seed, b)决定，从θ̂单起点重估
    """
    def __init__(self, fit, targets, seed, weight_law, weight_var, options,
                 x):
        self.fit = fit
        self.targets = targets
        self.seed = seed
        self.weight_law = weight_law
        self.weight_var = weight_var
        self.options = options.replace(n_starts=1)
        self.x = x

    def __call__(self, b):
        data = self.fit.dataset
        rng = np.random.default_rng(list(np.atleast_1d(self.seed)) + [b])
        weights = draw_weights(rng, data.n, self.weight_law, self.weight_var)
        refit = fit_model(data, self.fit.spec, self.options, weights,
                          self.fit.theta_hat)
        if not refit.converged:
            raise ConvergenceError('bootstrap refit %d did not converge' % b)
        return [evaluate_target(refit.theta_hat, t, self.x)
                for t in self.targets]


def weighted_bootstrap(dataset,
                       spec,
                       targets,
                       B,
                       seed=0,
                       weight_law='exp',
                       weight_var=1.,
                       levels=(0.90, 0.95),
                       x=None,
                       options=None,
                       fit=None,
                       workers=None):
    """加权bootstrap：每次抽取均值为1的i.i.d.权重，最大化加权对数似然，
    记录各目标量。fit给出时直接用作点估计。
    seed可以是整数或整数序列，第b次的权重流为default_rng([*seed, b])。
    """
    if int(B) < 2:
        raise DomainError('bootstrap needs B >= 2, got %r' % B)
    options = options or FitOptions(seed=seed)
    if fit is None:
        fit = fit_model(dataset, spec, options)
    if x is None:
        x = fit.dataset.x_means()
    workers = default_threads if workers is None else workers
    point = [evaluate_target(fit.theta_hat, t, x) for t in targets]
    task = _BootstrapTask(fit, list(targets), seed, weight_law, weight_var,
                          options, x)
    results = ordered_map(task, range(int(B)), workers, desc='bootstrap')
    estimates = [r for r in results if not isinstance(r, Exception)]
    n_failed = int(B) - len(estimates)
    if n_failed:
        logger.warning('%d of %d bootstrap refits failed', n_failed, B)
    if n_failed > max_failure_rate * int(B):
        raise ConvergenceError('%d of %d bootstrap refits failed' %
                               (n_failed, B))
    return BootstrapResult(targets, point, estimates, levels, n_failed, seed,
                           weight_law)
