# -*- coding: utf-8 -*-
# Monte Carlo：数据生成、场景预设、偏差/标准差/RMSE汇总、bootstrap覆盖率

import json
import logging
import os
import numpy as np
from copula4probit.backend import default_threads
from copula4probit.copulas import get_copula, copulas
from copula4probit.marginals import Normal, StudentT, calibrate_mixture
from copula4probit.marginals import sieve_constant
from copula4probit.likelihood import Dataset, Normalization
from copula4probit.estimators import ModelSpec, FitOptions, fit_model
from copula4probit.inference import evaluate_target, weighted_bootstrap
from copula4probit.snippets import DomainError, ConvergenceError
from copula4probit.snippets import ordered_map, format_table

logger = logging.getLogger(__name__)

# 失败的复制超过这个比例则终止
max_failure_rate = 0.05
# Monte Carlo汇总的目标量
mc_targets = ['gamma', 'delta1', 'rho_sp', 'ate']
# 覆盖率研究的目标量
coverage_targets = ['ate', 'alpha:x2', 'gamma', 'beta:x2', 'delta1', 'rho',
                    'rho_sp']
# 混合正态的真实ATE
mixture_ate = 0.1066
# --full对应的复制次数
full_replications = 2000
# 混合正态边缘的双峰需要更多筛项：n=500时k_n=6，仍按n^{1/7}增长
mixture_sieve_c = sieve_constant(6, 500)


def model_label(model):
    label = '%s-%s' % (model['marginal'], model['copula'])
    if model.get('g', 'normal') != 'normal':
        label += '-' + model['g']
    return label


class Scenario(object):
    """一个Monte Carlo场景：DGP、样本量、复制次数、待估模型
    协变量(X, Z)为多元正态，均值0、方差1，两两相关系数为corr；
    pinned中的X列在两个方程里固定为真值，作为尺度归一化。
    """
    def __init__(self,
                 name,
                 n=500,
                 replications=200,
                 copula='gaussian',
                 rho_sp=0.5,
                 marginal='normal',
                 alpha=(-1.,),
                 beta=(-1.,),
                 gamma=(0.8,),
                 delta1=1.1,
                 corr=-0.1,
                 pinned=('x1',),
                 models=None,
                 n_starts=2,
                 boot=0,
                 seed=0):
        self.name = name
        self.n = int(n)
        self.replications = int(replications)
        self.copula = get_copula(copula)
        self.rho_sp = float(rho_sp)
        self.marginal = marginal
        self.alpha = np.asarray(alpha, dtype=float)
        self.beta = np.asarray(beta, dtype=float)
        self.gamma = np.asarray(gamma, dtype=float)
        self.delta1 = float(delta1)
        self.corr = float(corr)
        self.pinned = list(pinned)
        self.models = list(models or [{'copula': self.copula.name,
                                       'marginal': 'parametric'}])
        self.n_starts = int(n_starts)
        self.boot = int(boot)
        self.seed = int(seed)
        if self.n < 2 or self.replications < 1:
            raise DomainError('scenario needs n >= 2 and replications >= 1')
        if len(self.alpha) != len(self.beta):
            raise DomainError('alpha and beta must have the same length')
        self.x_names = ['x%d' % (i + 1) for i in range(len(self.alpha))]
        self.z_names = ['z%d' % (i + 1) for i in range(len(self.gamma))]
        for name in self.pinned:
            if name not in self.x_names:
                raise DomainError('pinned column %r is not a regressor' % name)
        if self.copula.name == 'comonotone':
            self.rho = 1.
        else:
            self.rho = self.copula.from_spearman(self.rho_sp)
        self.law = self._law()

    def _law(self):
        if self.marginal == 'normal':
            return Normal(0., 1., free=False)
        if self.marginal == 'mixture':
            return calibrate_mixture(mixture_ate, self.delta1)
        if self.marginal == 't3':
            return StudentT(3.)
        raise DomainError('unknown marginal law %r' % self.marginal)

    @property
    def dim(self):
        return len(self.alpha) + len(self.gamma)

    def covariance(self):
        k = self.dim
        return (1 - self.corr) * np.eye(k) + self.corr * np.ones((k, k))

    def normalization(self):
        j = [self.x_names.index(name) for name in self.pinned]
        return Normalization.fixed_coefficient(
            {self.x_names[i]: self.alpha[i] for i in j},
            {self.x_names[i]: self.beta[i] for i in j})

    def model_spec(self, model):
        return ModelSpec(model['copula'], model['marginal'],
                         model.get('g', 'normal'), model.get('kn', 'auto'),
                         self.normalization(),
                         model.get('location_scale', False),
                         kn_c=model.get('kn_c'))

    def truth(self, target):
        """目标量真值，ATE在协变量总体均值x=0处
        """
        if target == 'gamma':
            return float(self.gamma[0])
        if target == 'delta1':
            return self.delta1
        if target == 'rho_sp':
            return self.rho_sp
        if target == 'rho':
            return self.rho
        if target == 'ate':
            return float(self.law.cdf(self.delta1) - self.law.cdf(0.))
        which, _, column = target.partition(':')
        if which in ('alpha', 'beta') and column in self.x_names:
            return float(getattr(self, which)[self.x_names.index(column)])
        if which == 'gamma' and column in self.z_names:
            return float(self.gamma[self.z_names.index(column)])
        raise DomainError('unknown target %r' % target)

    def replace(self, **kwargs):
        fields = self.to_dict()
        fields.update(kwargs)
        return Scenario(**fields)

    def to_dict(self):
        return {
            'name': self.name,
            'n': self.n,
            'replications': self.replications,
            'copula': self.copula.name,
            'rho_sp': self.rho_sp,
            'marginal': self.marginal,
            'alpha': self.alpha.tolist(),
            'beta': self.beta.tolist(),
            'gamma': self.gamma.tolist(),
            'delta1': self.delta1,
            'corr': self.corr,
            'pinned': self.pinned,
            'models': self.models,
            'n_starts': self.n_starts,
            'boot': self.boot,
            'seed': self.seed,
        }


def _both(copula, g='normal', kn_c=None):
    sieve = {'copula': copula, 'marginal': 'sieve', 'g': g}
    if kn_c is not None:
        sieve['kn_c'] = kn_c
    return [{'copula': copula, 'marginal': 'parametric'}, sieve]


def _presets():
    """内置场景：主表、copula误设交叉、不同ρ_sp、t(3)边缘、bootstrap覆盖率
    """
    presets = {}
    names = sorted(copulas, key=['gaussian', 'frank', 'clayton',
                                 'gumbel'].index)
    for family in names:
        presets['table1-' + family] = dict(copula=family, marginal='normal',
                                           models=_both(family))
        presets['table2-' + family] = dict(
            copula=family, marginal='mixture',
            models=_both(family, kn_c=mixture_sieve_c))
        for rho_sp in (-0.5, 0.2, 0.7):
            if rho_sp < 0 and family in ('clayton', 'gumbel'):
                continue
            for table, law in (('table1', 'normal'), ('table2', 'mixture')):
                kn_c = mixture_sieve_c if law == 'mixture' else None
                presets['%s-%s-rho%g' % (table, family, rho_sp)] = dict(
                    copula=family, marginal=law, rho_sp=rho_sp,
                    models=_both(family, kn_c=kn_c))
    for i, family in enumerate(names):
        models = []
        for other in names:
            if other != family:
                models.extend(_both(other, kn_c=mixture_sieve_c))
        presets['cop%d' % (i + 1)] = dict(copula=family, marginal='mixture',
                                          models=models)
    presets['t3-normal'] = dict(marginal='t3', models=_both('gaussian'))
    presets['t3-t3'] = dict(marginal='t3', models=_both('gaussian', 't3'))
    presets['bootstrap-coverage'] = dict(
        alpha=(-1., 0.5), beta=(-1., 0.8), gamma=(0.8,), delta1=1.1,
        models=[{'copula': 'gaussian', 'marginal': 'sieve'}], boot=200)
    return presets


def preset_names():
    return sorted(_presets())


def load_scenario(name, **overrides):
    """按预设名或json文件路径加载场景，overrides覆盖其中字段
    """
    if os.path.isfile(name):
        with open(name, encoding='utf-8') as f:
            fields = json.load(f)
        fields.setdefault('name', os.path.splitext(os.path.basename(name))[0])
    else:
        presets = _presets()
        if name not in presets:
            raise DomainError('unknown preset %r, see `presets`' % name)
        fields = dict(presets[name], name=name)
    fields.update({k: v for k, v in overrides.items() if v is not None})
    return Scenario(**fields)


def simulate_dataset(scenario, replication):
    """第replication次复制的数据，随机流由(seed, replication)决定
    """
    rng = np.random.default_rng([scenario.seed, int(replication)])
    k = len(scenario.alpha)
    w = rng.standard_normal((scenario.n, scenario.dim))
    w = w.dot(np.linalg.cholesky(scenario.covariance()).T)
    x, z = w[:, :k], w[:, k:]
    u = scenario.copula.sample(scenario.rho, scenario.n, rng)
    eps, nu = scenario.law.ppf(u[:, 0]), scenario.law.ppf(u[:, 1])
    d = (x.dot(scenario.alpha) + z.dot(scenario.gamma) >= nu).astype(int)
    y = (x.dot(scenario.beta) + d * scenario.delta1 >= eps).astype(int)
    return Dataset(y, d, x, z, scenario.x_names, scenario.z_names)


class _Replication(object):
    """一次复制：生成数据，逐个模型估计，失败的模型记为None
    """
    def __init__(self, scenario, targets):
        self.scenario = scenario
        self.targets = targets

    def __call__(self, r):
        sc = self.scenario
        data = simulate_dataset(sc, r)
        options = FitOptions(n_starts=sc.n_starts, seed=[sc.seed, r])
        x = np.zeros(len(sc.alpha))
        out = []
        for model in sc.models:
            try:
                fit = fit_model(data, sc.model_spec(model), options)
                if not fit.converged:
                    raise ConvergenceError(fit.message)
                out.append([evaluate_target(fit.theta_hat, t, x)
                            for t in self.targets])
            except (ConvergenceError, ValueError, ArithmeticError) as e:
                logger.warning('replication %d, model %s failed: %s', r,
                               model_label(model), e)
                out.append(None)
        return out


class McSummary(object):
    """每个模型、每个目标量的真值、均值、标准差、偏差、RMSE
    标准差和RMSE都按总体公式（除以复制数）计算，故RMSE² = 偏差² + SD²。
    """
    def __init__(self, scenario, targets, estimates):
        self.scenario = scenario
        self.targets = list(targets)
        self.models = [model_label(m) for m in scenario.models]
        self.truth = np.array([scenario.truth(t) for t in self.targets])
        self.estimates = {}
        self.n_failed = {}
        for j, label in enumerate(self.models):
            rows = [r[j] for r in estimates if r[j] is not None]
            self.estimates[label] = np.array(rows, dtype=float).reshape(
                -1, len(self.targets))
            self.n_failed[label] = len(estimates) - len(rows)

    def stats(self, label):
        est = self.estimates[label]
        mean = est.mean(axis=0)
        sd = est.std(axis=0)
        bias = mean - self.truth
        rmse = np.sqrt(np.mean((est - self.truth)**2, axis=0))
        return {'truth': self.truth, 'mean': mean, 'sd': sd, 'bias': bias,
                'rmse': rmse}


def run_monte_carlo(scenario, workers=None, targets=None):
    """对场景做replications次复制，汇总偏差、标准差、RMSE
    """
    targets = list(targets or mc_targets)
    workers = default_threads if workers is None else workers
    logger.info('scenario %s: n=%d, %d replications, %d workers',
                scenario.name, scenario.n, scenario.replications, workers)
    results = ordered_map(_Replication(scenario, targets),
                          range(scenario.replications), workers,
                          desc=scenario.name)
    for r, result in enumerate(results):
        if isinstance(result, Exception):
            logger.warning('replication %d failed: %s', r, result)
            results[r] = [None] * len(scenario.models)
    summary = McSummary(scenario, targets, results)
    for label, failed in summary.n_failed.items():
        if failed > max_failure_rate * scenario.replications:
            raise ConvergenceError('%s: %d of %d replications failed' %
                                   (label, failed, scenario.replications))
    return summary


_headers = {'gamma': 'gamma', 'delta1': 'delta1', 'rho_sp': 'rho_sp',
            'ate': 'ATE'}


def format_summary(summary):
    """按主表的版式输出：每个模型一块，行为真值、估计、S.D、偏差、RMSE
    """
    blocks = []
    for label in summary.models:
        st = summary.stats(label)
        rows = [['True Values'] + list(st['truth']),
                ['Estimate'] + list(st['mean']),
                ['S.D'] + list(st['sd']),
                ['Bias'] + list(st['bias']),
                ['RMSE'] + list(st['rmse'])]
        headers = [''] + [_headers.get(t, t) for t in summary.targets]
        title = '%s: %s (n=%d, %d replications, %d failed)' % (
            summary.scenario.name, label, summary.scenario.n,
            summary.scenario.replications, summary.n_failed[label])
        blocks.append(format_table(headers, rows, title))
    return '\n\n'.join(blocks)


def summary_records(summary):
    """机器可读的行：场景、模型、目标量、真值、均值、sd、偏差、rmse
    """
    records = []
    for label in summary.models:
        st = summary.stats(label)
        for j, target in enumerate(summary.targets):
            records.append({
                'scenario': summary.scenario.name,
                'seed': summary.scenario.seed,
                'n': summary.scenario.n,
                'model': label,
                'target': target,
                'truth': st['truth'][j],
                'mean': st['mean'][j],
                'sd': st['sd'][j],
                'bias': st['bias'][j],
                'rmse': st['rmse'][j],
                'n_ok': len(summary.estimates[label]),
                'n_failed': summary.n_failed[label],
            })
    return records


class _CoverageSim(object):
    """一次覆盖率模拟：生成数据、点估计、加权bootstrap
    """
    def __init__(self, scenario, targets, B, level, weight_law):
        self.scenario = scenario
        self.targets = targets
        self.B = B
        self.level = level
        self.weight_law = weight_law

    def __call__(self, r):
        sc = self.scenario
        data = simulate_dataset(sc, r)
        spec = sc.model_spec(sc.models[0])
        options = FitOptions(n_starts=sc.n_starts, seed=[sc.seed, r])
        result = weighted_bootstrap(data, spec, self.targets, self.B,
                                    seed=[sc.seed, r], weight_law=self.weight_law,
                                    levels=(self.level,),
                                    x=np.zeros(len(sc.alpha)),
                                    options=options, workers=1)
        truth = np.array([sc.truth(t) for t in self.targets])
        lo, hi = result.pci[self.level]
        nlo, nhi = result.normal_ci[self.level]
        return ((lo <= truth) & (truth <= hi), (nlo <= truth) & (truth <= nhi))


class CoverageSummary(object):
    """百分位区间与正态近似区间的覆盖率
    """
    def __init__(self, scenario, targets, level, hits, n_failed):
        self.scenario = scenario
        self.targets = list(targets)
        self.level = level
        self.n_ok = len(hits)
        self.n_failed = n_failed
        pci = np.array([h[0] for h in hits], dtype=float)
        normal = np.array([h[1] for h in hits], dtype=float)
        self.pci_coverage = pci.mean(axis=0)
        self.normal_coverage = normal.mean(axis=0)

    def records(self):
        return [{'scenario': self.scenario.name, 'seed': self.scenario.seed,
                 'target': t, 'level': self.level,
                 'truth': self.scenario.truth(t),
                 'percentile': self.pci_coverage[j],
                 'normal': self.normal_coverage[j], 'n_ok': self.n_ok,
                 'n_failed': self.n_failed}
                for j, t in enumerate(self.targets)]

    def format(self):
        rows = [[t, self.normal_coverage[j], self.pci_coverage[j]]
                for j, t in enumerate(self.targets)]
        title = ('%s: coverage at nominal %.2f (%d sims, B=%d); percentile '
                 'intervals recommended' % (self.scenario.name, self.level,
                                            self.n_ok, self.scenario.boot))
        return format_table(['', 'Normal Approximation',
                             'Bootstrap Percentile'], rows, title)


def run_bootstrap_coverage(scenario, level=0.95, weight_law='exp',
                           workers=None, targets=None):
    """replications次模拟，每次做boot次加权bootstrap，统计真值落入区间的频率
    """
    targets = list(targets or coverage_targets)
    if scenario.boot < 2:
        raise DomainError('coverage study needs boot >= 2')
    workers = default_threads if workers is None else workers
    task = _CoverageSim(scenario, targets, scenario.boot, level, weight_law)
    results = ordered_map(task, range(scenario.replications), workers,
                          desc=scenario.name)
    hits = [r for r in results if not isinstance(r, Exception)]
    n_failed = len(results) - len(hits)
    if n_failed:
        logger.warning('%d of %d coverage simulations failed', n_failed,
                       len(results))
    if n_failed > max_failure_rate * len(results):
        raise ConvergenceError('%d of %d coverage simulations failed' %
                               (n_failed, len(results)))
    return CoverageSummary(scenario, targets, level, hits, n_failed)
