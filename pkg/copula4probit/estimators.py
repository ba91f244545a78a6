# -*- coding: utf-8 -*-
# 参数ML与筛ML估计，以及条件ATE

import logging
import warnings
import numpy as np
from copula4probit.copulas import get_copula
from copula4probit.marginals import LocationScale, SieveMarginal
from copula4probit.marginals import standardized, sieve_order, get_transform
from copula4probit.marginals import transform_name
from copula4probit.likelihood import Theta, Normalization
from copula4probit.likelihood import loglik_and_grad
from copula4probit.optimizers import QuasiNewton
from copula4probit.snippets import DomainError, DataError
from copula4probit.snippets import IdentificationWarning

logger = logging.getLogger(__name__)

# Clayton、Gumbel的独立点在参数域边界上，从ρ_sp=0.2出发
_start_spearman = {'gaussian': 0., 'frank': 0., 'clayton': 0.2, 'gumbel': 0.2}


class ModelSpec(object):
    """模型设定：copula族、边缘（parametric或sieve）、变换G、筛阶数、归一化
    kn为auto时按kn_policy取k_n，kn_c为比例常数（缺省n=500时k_n=2）。
    parametric + fixed-coefficient时，location_scale控制边缘是否带
    自由的位置、尺度参数；为False时边缘就是G本身。
    """
    def __init__(self,
                 copula='gaussian',
                 marginal='parametric',
                 g='normal',
                 kn='auto',
                 normalization=None,
                 location_scale=True,
                 kn_policy='auto',
                 kn_c=None):
        self.copula = get_copula(copula)
        if marginal not in ('parametric', 'sieve'):
            raise DomainError('marginal must be parametric or sieve')
        self.marginal = marginal
        self.g = get_transform(g)
        self.kn = kn
        self.kn_policy = kn_policy
        self.kn_c = kn_c
        if normalization is None:
            if marginal == 'sieve':
                raise DomainError('the sieve model needs a fixed-coefficient '
                                  'normalization')
            normalization = Normalization.mean_var_unit()
        self.normalization = normalization
        self.location_scale = location_scale
        if marginal == 'sieve' and not normalization.is_fixed:
            raise DomainError('the sieve model needs a fixed-coefficient '
                              'normalization')

    def replace(self, **kwargs):
        fields = dict(copula=self.copula, marginal=self.marginal, g=self.g,
                      kn=self.kn, normalization=self.normalization,
                      location_scale=self.location_scale,
                      kn_policy=self.kn_policy, kn_c=self.kn_c)
        fields.update(kwargs)
        return ModelSpec(**fields)

    def resolve_kn(self, n):
        if self.marginal != 'sieve':
            return None
        if self.kn in (None, 'auto'):
            return sieve_order(n, self.kn_policy, c=self.kn_c)
        kn = int(self.kn)
        if kn < 0:
            raise DomainError('k_n must be nonnegative')
        return kn

    def marginals(self, n):
        """按设定构造两个初始边缘分布
        """
        if self.marginal == 'sieve':
            a = np.zeros(self.resolve_kn(n) + 1)
            a[0] = 1.
            return SieveMarginal(self.g, a), SieveMarginal(self.g, a)
        if not self.normalization.is_fixed:
            return standardized(self.g), standardized(self.g)
        free = bool(self.location_scale)
        return (LocationScale(self.g, 0., 1., free),
                LocationScale(self.g, 0., 1., free))

    def to_dict(self):
        return {'copula': self.copula.name, 'marginal': self.marginal,
                'g': transform_name(self.g), 'kn': self.kn,
                'kn_policy': self.kn_policy,
                'kn_c': self.kn_c,
                'location_scale': self.location_scale,
                'normalization': self.normalization.to_dict()}


class FitOptions(object):
    """优化选项
    """
    def __init__(self,
                 n_starts=5,
                 jitter=0.25,
                 tol_g=1e-6,
                 max_iter=500,
                 bound=50.,
                 polish=3,
                 ladder=True,
                 seed=0):
        self.n_starts = int(n_starts)
        self.jitter = jitter
        self.tol_g = tol_g
        self.max_iter = max_iter
        self.bound = bound
        self.polish = polish
        self.ladder = ladder
        self.seed = seed
        assert self.n_starts >= 1, 'need at least one start'

    def optimizer(self):
        return QuasiNewton(polish=self.polish, tol_g=self.tol_g,
                           max_iter=self.max_iter)

    def replace(self, **kwargs):
        fields = dict(self.__dict__)
        fields.update(kwargs)
        return FitOptions(**fields)

    def to_dict(self):
        return dict(self.__dict__)


class FitResult(object):
    """估计结果
    """
    def __init__(self, theta_hat, loglik_value, iterations, converged,
                 gradient_norm, start_points_used, spec, dataset, kn=None,
                 message=''):
        self.theta_hat = theta_hat
        self.loglik_value = loglik_value
        self.iterations = iterations
        self.converged = converged
        self.gradient_norm = gradient_norm
        self.start_points_used = start_points_used
        self.spec = spec
        self.dataset = dataset
        self.kn = kn
        self.message = message

    @property
    def normalization(self):
        return self.theta_hat.normalization

    def ate(self, x=None):
        if x is None:
            x = self.dataset.x_means()
        return ate(self.theta_hat, x)

    def to_dict(self):
        return {
            'model': self.spec.marginal,
            'spec': self.spec.to_dict(),
            'theta': self.theta_hat.to_dict(),
            'loglik': self.loglik_value,
            'iterations': self.iterations,
            'converged': self.converged,
            'gradient_norm': self.gradient_norm,
            'start_points_used': self.start_points_used,
            'kn': self.kn,
            'n_obs': self.dataset.n,
        }


def prepare(dataset, spec):
    """检查数据并按归一化方式加入截距
    """
    if np.all(dataset.y == dataset.y[0]):
        raise DataError('outcome y is constant')
    if np.all(dataset.d == dataset.d[0]):
        raise DataError('treatment d is constant')
    if dataset.z.shape[1] == 0 or np.all(dataset.z.std(axis=0) == 0):
        warnings.warn(
            'no instrument varies; delta1 and rho may not be separately '
            'identified', IdentificationWarning)
    if not spec.normalization.is_fixed:
        dataset = dataset.with_constant()
    return dataset


def initial_theta(dataset, spec):
    """所有自由系数为0、固定系数取固定值的初始参数
    """
    k, l = dataset.x.shape[1], dataset.z.shape[1]
    norm = spec.normalization
    alpha, beta = np.zeros(k), np.zeros(k)
    for j, v in norm.pinned(dataset.x_names, 'alpha').items():
        alpha[j] = v
    for j, v in norm.pinned(dataset.x_names, 'beta').items():
        beta[j] = v
    marg_eps, marg_nu = spec.marginals(dataset.n)
    return Theta(alpha, beta, 0., np.zeros(l), spec.copula.independence,
                 marg_eps, marg_nu, spec.copula, norm, dataset.x_names,
                 dataset.z_names)


def _objective(theta, dataset, weights):
    def func(vector):
        return loglik_and_grad(theta.with_free(vector), dataset, weights)

    return func


def _jittered(x0, options):
    rng = np.random.default_rng(options.seed)
    starts = [x0]
    for _ in range(options.n_starts - 1):
        scale = options.jitter * np.maximum(np.abs(x0), 0.1)
        starts.append(x0 + scale * rng.standard_normal(len(x0)))
    return np.array(starts)


def _maximize(theta, dataset, starts, options, weights):
    bounds = theta.free_bounds(options.bound)
    record = options.optimizer().maximize(_objective(theta, dataset, weights),
                                          starts, bounds)
    return theta.with_free(record.x), record


def two_probit_start(dataset, spec, options, weights=None):
    """ρ固定在独立点时似然分解为D、Y两个二元选择模型，
    以此作为热启动
    """
    gauss = spec.replace(copula='gaussian')
    theta = initial_theta(dataset, gauss)
    bounds = theta.free_bounds(options.bound)
    eta = theta.blocks()['eta'].start
    bounds[eta] = (0., 0.)
    record = options.optimizer().maximize(
        _objective(theta, dataset, weights), theta.free_vector(), bounds)
    warm = theta.with_free(record.x)
    family = spec.copula
    rho = family.from_spearman(_start_spearman[family.name])
    return warm.replace(copula=family, rho=rho)


def fit_parametric(dataset, spec, options=None, weights=None, start=None):
    """参数ML：拟牛顿法加多起点
    start为Theta时只用它（及抖动）作为起点，否则用两个二元选择
    模型的热启动。
    """
    options = options or FitOptions()
    if spec.marginal != 'parametric':
        spec = spec.replace(marginal='parametric')
    data = prepare(dataset, spec)
    if start is None:
        start = two_probit_start(data, spec, options, weights)
    starts = _jittered(start.free_vector(), options)
    theta_hat, record = _maximize(start, data, starts, options, weights)
    logger.info('parametric %s fit: loglik=%.8f converged=%s',
                spec.copula.name, record.value, record.converged)
    return FitResult(theta_hat, record.value, record.iterations,
                     record.converged, record.gradient_norm,
                     record.start_points_used, spec, data, None,
                     record.message)


def _with_order(marginal, g, k):
    if isinstance(marginal, SieveMarginal):
        return marginal.with_order(k)
    return SieveMarginal(g, np.eye(k + 1)[0])


def fit_sieve(dataset, spec, options=None, weights=None, start=None):
    """筛ML：ψ的自由部分与两组筛系数（a₀固定为1）联合最大化
    默认从h≡1（边缘即G）的参数拟合出发；options.ladder为True时
    逐阶增加k，每阶从上一阶的估计出发，只在最终阶数上用多起点。
    """
    options = options or FitOptions()
    if not spec.normalization.is_fixed:
        raise DomainError('the sieve model needs a fixed-coefficient '
                          'normalization')
    data = prepare(dataset, spec)
    kn = spec.resolve_kn(data.n)
    if start is None:
        base = spec.replace(marginal='parametric', location_scale=False)
        start = fit_parametric(data, base, options, weights).theta_hat
    low = min(getattr(start.marg_eps, 'order', 0),
              getattr(start.marg_nu, 'order', 0))
    orders = list(range(low + 1, kn)) if options.ladder else []
    theta = start
    for k in orders + [kn]:
        theta = theta.replace(marg_eps=_with_order(theta.marg_eps, spec.g, k),
                              marg_nu=_with_order(theta.marg_nu, spec.g, k))
        if k < kn:
            theta, record = _maximize(theta, data, theta.free_vector(),
                                      options.replace(n_starts=1), weights)
            logger.debug('sieve ladder k=%d: loglik=%.8f', k, record.value)
    starts = _jittered(theta.free_vector(), options)
    theta_hat, record = _maximize(theta, data, starts, options, weights)
    logger.info('sieve %s fit (k_n=%d): loglik=%.8f converged=%s',
                spec.copula.name, kn, record.value, record.converged)
    return FitResult(theta_hat, record.value, record.iterations,
                     record.converged, record.gradient_norm,
                     record.start_points_used, spec, data, kn,
                     record.message)


def fit_model(dataset, spec, options=None, weights=None, start=None):
    if spec.marginal == 'sieve':
        return fit_sieve(dataset, spec, options, weights, start)
    return fit_parametric(dataset, spec, options, weights, start)


def ate(theta, x):
    """条件ATE：F_ε(x'β + δ₁) - F_ε(x'β)
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape[-1] != len(theta.beta):
        raise DomainError('x has %d entries, beta has %d' %
                          (x.shape[-1], len(theta.beta)))
    index = x.dot(theta.beta)
    me = theta.marg_eps
    value = me.cdf(index + theta.delta1) - me.cdf(index)
    return float(value) if np.ndim(value) == 0 else value


def pin_from_parametric(dataset, column, copula='gaussian', g='normal',
                        options=None):
    """把某个regressor的系数固定为其MeanVarUnit参数估计，
    返回可用于筛模型的FixedCoefficient归一化
    """
    spec = ModelSpec(copula, 'parametric', g)
    fit = fit_parametric(dataset, spec, options)
    names = fit.theta_hat.x_names
    if column not in names:
        raise DataError('column %r not in x' % column)
    j = names.index(column)
    return Normalization.fixed_coefficient(
        {column: float(fit.theta_hat.alpha[j])},
        {column: float(fit.theta_hat.beta[j])})
