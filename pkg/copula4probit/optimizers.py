# -*- coding: utf-8 -*-
# 优化相关：L-BFGS-B拟牛顿法，以及重启、多起点扩展

import logging
import numpy as np
from scipy.optimize import minimize
from copula4probit.snippets import ConvergenceError

logger = logging.getLogger(__name__)


def projected_gradient_norm(x, grad, bounds):
    """盒约束下的投影梯度无穷范数（grad为最大化目标的梯度）
    """
    g = np.asarray(grad, dtype=float).copy()
    lo = np.array([b[0] for b in bounds], dtype=float)
    hi = np.array([b[1] for b in bounds], dtype=float)
    g[(x <= lo) & (g < 0)] = 0.
    g[(x >= hi) & (g > 0)] = 0.
    if len(g) == 0:
        return 0.
    return float(np.max(np.abs(g)))


class OptimizeRecord(object):
    """一次优化的结果
    """
    def __init__(self, x, value, grad, iterations, converged, gradient_norm,
                 message, start=None):
        self.x = x
        self.value = value
        self.grad = grad
        self.iterations = iterations
        self.converged = converged
        self.gradient_norm = gradient_norm
        self.message = message
        self.start = start
        self.records = [self]
        self.n_starts = 1

    @property
    def start_points_used(self):
        return self.n_starts


class LBFGSB(object):
    """用L-BFGS-B（带线搜索的拟牛顿法）最大化func
    func(x)返回(目标值, 梯度)；非有限值视为失败点。
    """
    def __init__(self, tol_g=1e-6, max_iter=500, ftol=1e-14, maxls=50):
        self.tol_g = tol_g
        self.max_iter = max_iter
        self.ftol = ftol
        self.maxls = maxls

    def _safe(self, func, x):
        try:
            value, grad = func(x)
        except (ValueError, FloatingPointError, ArithmeticError):
            return -np.inf, np.zeros_like(x)
        grad = np.asarray(grad, dtype=float)
        if not np.isfinite(value) or not np.all(np.isfinite(grad)):
            return -np.inf, np.zeros_like(x)
        return float(value), grad

    def _wrap(self, func):
        def negative(x):
            value, grad = self._safe(func, x)
            if not np.isfinite(value):
                return 1e10, grad
            return -value, -grad

        return negative

    def maximize(self, func, x0, bounds, max_iter=None):
        x0 = np.clip(np.asarray(x0, dtype=float),
                     [b[0] for b in bounds], [b[1] for b in bounds])
        result = minimize(self._wrap(func),
                          x0,
                          jac=True,
                          method='L-BFGS-B',
                          bounds=bounds,
                          options={
                              'maxiter': max_iter or self.max_iter,
                              'gtol': self.tol_g,
                              'ftol': self.ftol,
                              'maxls': self.maxls,
                          })
        value, grad = self._safe(func, result.x)
        norm = projected_gradient_norm(result.x, grad, bounds)
        return OptimizeRecord(result.x, float(value), grad, int(result.nit),
                              bool(np.isfinite(value) and norm < self.tol_g),
                              norm, str(result.message), x0)


def extend_with_polishing(base_optimizer, name=None):
    """返回新的优化器类，未收敛时从当前点重启
    """
    class new_optimizer(base_optimizer):
        """最多重启polish次，直到投影梯度小于tol_g
        """
        def __init__(self, polish=3, *args, **kwargs):
            super(new_optimizer, self).__init__(*args, **kwargs)
            self.polish = polish

        def maximize(self, func, x0, bounds, max_iter=None):
            budget = max_iter or self.max_iter
            record = super(new_optimizer, self).maximize(func, x0, bounds,
                                                         budget)
            iterations, start = record.iterations, record.start
            for _ in range(self.polish):
                if record.converged or iterations >= budget:
                    break
                if not np.isfinite(record.value):
                    break
                record = super(new_optimizer, self).maximize(
                    func, record.x, bounds, budget - iterations)
                iterations += record.iterations
            record.iterations, record.start = iterations, start
            return record

    if name:
        new_optimizer.__name__ = name

    return new_optimizer


def extend_with_multi_start(base_optimizer, name=None):
    """返回新的优化器类，从多个起点出发取最优
    """
    class new_optimizer(base_optimizer):
        """x0可以是单个起点或起点列表；优先返回已收敛的最优结果
        """
        def maximize(self, func, x0, bounds, max_iter=None):
            starts = np.atleast_2d(np.asarray(x0, dtype=float))
            records = []
            for i, start in enumerate(starts):
                parent = super(new_optimizer, self)
                record = parent.maximize(func, start, bounds, max_iter)
                logger.debug('start %d: value=%.10g converged=%s |pg|=%.2e',
                             i, record.value, record.converged,
                             record.gradient_norm)
                if np.isfinite(record.value) and record.value > -1e9:
                    records.append(record)
            if not records:
                raise ConvergenceError('all %d starting points failed' %
                                       len(starts))
            converged = [r for r in records if r.converged]
            pool = converged or records
            best = max(pool, key=lambda r: r.value)
            best.records = records
            best.n_starts = len(starts)
            return best

    if name:
        new_optimizer.__name__ = name

    return new_optimizer


QuasiNewton = extend_with_multi_start(extend_with_polishing(LBFGSB),
                                      'QuasiNewton')
