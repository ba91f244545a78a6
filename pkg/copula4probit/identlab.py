# -*- coding: utf-8 -*-
# 识别实验：没有工具变量时的观测等价反例，以及连续X下的失效分布

import logging
import numpy as np
from copula4probit.backend import norm_cdf, norm_ppf, bisect
from copula4probit.copulas import get_copula, si_ordering_scan
from copula4probit.likelihood import probs_from_indices
from copula4probit.snippets import DomainError, ConvergenceError

logger = logging.getLogger(__name__)

positivity_scan = si_ordering_scan

cell_names = ['11', '10', '01', '00']


def _uniform_cdf(x):
    return np.clip(x, 0., 1.)


def _uniform_ppf(u):
    return np.asarray(u, dtype=float)


class BinaryCounterexample(object):
    """二值X下的两组参数(t0, t1, q0, q1, δ₁, ρ)，F取[0,1]上的均匀分布
    ρ = 1时用comonotone copula，否则用Gaussian copula。
    """
    def __init__(self, set_a, set_b):
        self.set_a = tuple(float(v) for v in set_a)
        self.set_b = tuple(float(v) for v in set_b)
        for params in (self.set_a, self.set_b):
            assert len(params) == 6, 'expected (t0, t1, q0, q1, delta1, rho)'
            if not all(0 < v < 1 for v in params[:4]):
                raise DomainError('t and q must lie strictly inside (0, 1)')

    @staticmethod
    def copula_for(rho):
        if rho == 1:
            return get_copula('comonotone')
        return get_copula('gaussian')

    @property
    def distinct(self):
        a, b = self.set_a, self.set_b
        return all(a[i] != b[i] for i in (0, 1, 4, 5))

    def probabilities(self, which='a'):
        """(x, 格)的2×4概率表，格的顺序为11、10、01、00
        """
        t0, t1, q0, q1, delta1, rho = (self.set_a if which == 'a' else
                                       self.set_b)
        copula = self.copula_for(rho)
        r0, s = np.array([t0, t1]), np.array([q0, q1])
        r1 = _uniform_cdf(_uniform_ppf(r0) + delta1)
        cdf = lambda u, v: copula.cdf(u, v, rho)
        return probs_from_indices(r0, r1, s, cdf)

    def to_dict(self):
        return {'set_a': self.set_a, 'set_b': self.set_b,
                'copula_a': self.copula_for(self.set_a[5]).name,
                'copula_b': self.copula_for(self.set_b[5]).name}


def default_counterexample():
    """ρ=0与ρ*=1给出相同拟合概率的两组参数
    """
    return BinaryCounterexample((1. / 3, 2. / 3, 1. / 3, 2. / 3, 0., 0.),
                                (5. / 9, 8. / 9, 1. / 3, 2. / 3, -4. / 9, 1.))


def verify_binary_counterexample(example):
    """两组参数下8个拟合概率的最大绝对差
    """
    diff = example.probabilities('a') - example.probabilities('b')
    return float(np.max(np.abs(diff)))


def counterexample_report(example, tol=1e-14):
    """供命令行输出的核对报告
    """
    pa, pb = example.probabilities('a'), example.probabilities('b')
    discrepancy = verify_binary_counterexample(example)
    rows = []
    for x in (0, 1):
        for j, cell in enumerate(cell_names):
            rows.append({'x': x, 'cell': cell, 'p_a': pa[x, j],
                         'p_b': pb[x, j]})
    return {'example': example.to_dict(), 'probabilities': rows,
            'max_discrepancy': discrepancy, 'distinct': example.distinct,
            'passed': bool(discrepancy < tol)}


def failure_point(q, t):
    """ρ=0、ρ*=1时的t* = q + (1-q)t与s† = q·t
    """
    q, t = np.asarray(q, dtype=float), np.asarray(t, dtype=float)
    return q + (1 - q) * t, q * t


def failure_delta(q, t, quantile):
    """δ₁*(x) = F⁻¹(q·t) - F⁻¹(q + (1-q)t)，识别失效要求它与x无关
    """
    t_star, s_dagger = failure_point(q, t)
    return quantile(s_dagger) - quantile(t_star)


class FailureDistribution(object):
    """失效分布的求解结果
    """
    def __init__(self, grid, cdf, delta1, residuals, converged,
                 constancy):
        self.grid = grid
        self.cdf = cdf
        self.delta1 = delta1
        self.residuals = residuals
        self.converged = converged
        self.constancy = constancy

    @property
    def residual(self):
        return self.residuals[-1]

    @property
    def iterations(self):
        return len(self.residuals)

    @property
    def monotone(self):
        """残差是否逐次不增
        """
        return bool(np.all(np.diff(self.residuals) <= 0))

    @property
    def increasing(self):
        return bool(np.all(np.diff(self.cdf) > 0))

    def deviation(self, lo=-3., hi=3.):
        """[lo, hi]上sup|F̃ - Φ|
        """
        mask = (self.grid >= lo) & (self.grid <= hi)
        return float(np.max(np.abs(self.cdf[mask] -
                                   norm_cdf(self.grid[mask]))))

    def records(self):
        """可直接作图的(x, F̃(x), Φ(x))
        """
        return [{'x': x, 'F': f, 'Phi': p}
                for x, f, p in zip(self.grid, self.cdf, norm_cdf(self.grid))]

    def to_dict(self):
        return {'delta1': self.delta1, 'residual': self.residual,
                'iterations': self.iterations, 'converged': self.converged,
                'increasing': self.increasing,
                'monotone': self.monotone,
                'sup_deviation': self.deviation(),
                'constancy': self.constancy,
                'residual_history': self.residuals}


def _sweep_order(grid, shifted, inside):
    """自上而下的更新批次：每批的y + d都落在已更新的网格段上
    d小于网格间距时退化为逐点更新。
    """
    todo = list(np.flatnonzero(inside)[::-1])
    top = int(np.flatnonzero(~inside)[0]) if (~inside).any() else len(grid)
    batches = []
    while todo:
        ready = [i for i in todo if top < len(grid) and
                 shifted[i] >= grid[top]]
        if not ready:
            ready = todo[:1]
        batches.append(np.array(ready))
        todo = todo[len(ready):]
        top = int(ready[-1])
    return batches


def solve_failure_distribution(q_of_x=norm_cdf,
                               t_of_x=norm_cdf,
                               grid=None,
                               delta1=None,
                               damping=0.5,
                               tol=1e-6,
                               max_iter=1000,
                               x_range=(-3., 3.)):
    """求严格递增的F̃与常数δ₁*，使F̃⁻¹(q·t) - F̃⁻¹(q + (1-q)t) = δ₁*
    记a = q·t，b = q + (1-q)t，d = -δ₁* > 0，则条件等价于
    F̃(y) = φ(F̃(y + d))，φ = a∘b⁻¹。每次迭代先自上而下做一遍
    Gauss-Seidel扫描得到S(F̃)，再取F̃ + damping·(S(F̃) - F̃)；
    y + d超出网格的点固定为Φ(y)。残差sup|S(F̃) - F̃|必须逐次不增，
    否则报告失败。δ₁*缺省时取Φ下x_range内Φ⁻¹(a) - Φ⁻¹(b)的均值。
    """
    if grid is None:
        grid = np.linspace(-4., 4., 201)
    grid = np.asarray(grid, dtype=float)
    assert np.all(np.diff(grid) > 0), 'grid must be increasing'
    if not 0 < damping <= 1:
        raise DomainError('damping must lie in (0, 1]')

    xs = np.linspace(x_range[0], x_range[1], 121)
    q, t = q_of_x(xs), t_of_x(xs)
    if np.any(np.diff(q) <= 0) or np.any(np.diff(t) <= 0):
        raise DomainError('q(x) and t(x) must be strictly increasing')
    if delta1 is None:
        delta1 = float(np.mean(failure_delta(q, t, norm_ppf)))
    d = -delta1
    if not d > 0:
        raise DomainError('delta1* must be negative, got %r' % delta1)

    a = lambda x: failure_point(q_of_x(x), t_of_x(x))[1]
    b = lambda x: failure_point(q_of_x(x), t_of_x(x))[0]

    def phi(p):
        x = bisect(b, p, -40., 40., tol=1e-13)
        return a(x)

    shifted = grid + d
    inside = shifted <= grid[-1]
    batches = _sweep_order(grid, shifted, inside)

    def sweep(cdf):
        out = cdf.copy()
        for idx in batches:
            out[idx] = phi(np.interp(shifted[idx], grid, out))
        return out

    cdf = norm_cdf(grid)
    residuals = []
    for _ in range(max_iter):
        target = sweep(cdf)
        residual = float(np.max(np.abs(target - cdf)))
        if residuals and residual > residuals[-1]:
            raise ConvergenceError(
                'fixed-point residual increased from %.3e to %.3e at '
                'iteration %d' % (residuals[-1], residual, len(residuals)))
        residuals.append(residual)
        if residual < tol:
            break
        cdf = cdf + damping * (target - cdf)
    converged = residuals[-1] < tol
    if not converged:
        raise ConvergenceError('fixed point not reached after %d iterations, '
                               'residual %.3e' % (max_iter, residuals[-1]))
    logger.info('failure distribution: delta1*=%.6f, %d iterations',
                delta1, len(residuals))

    # 在F̃上重新计算δ₁*(x)，其离散程度即常数性残差
    lo, hi = cdf[0], cdf[-1]
    quantile = lambda u: np.interp(u, cdf, grid)
    tq, sq = failure_point(q, t)
    ok = (sq >= lo) & (tq <= hi)
    spread = failure_delta(q[ok], t[ok], quantile)
    constancy = float(np.max(np.abs(spread - delta1))) if ok.any() else None
    return FailureDistribution(grid, cdf, delta1, residuals, converged,
                               constancy)
