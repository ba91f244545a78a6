# -*- coding: utf-8 -*-
"""拟牛顿优化器：收敛判据、盒约束、多起点
"""

import numpy as np
import pytest
from copula4probit.optimizers import QuasiNewton, LBFGSB
from copula4probit.optimizers import projected_gradient_norm
from copula4probit.snippets import ConvergenceError


def concave(x):
    return -np.sum((x - 1.)**2), -2 * (x - 1.)


def test_maximize_quadratic():
    record = QuasiNewton(tol_g=1e-8).maximize(concave, [[0., 0.], [3., -2.]],
                                              [(-5., 5.)] * 2)
    assert np.allclose(record.x, 1., atol=1e-6)
    assert record.converged
    assert record.start_points_used == 2
    assert len(record.records) == 2


def test_active_bound_counts_as_converged():
    record = LBFGSB().maximize(concave, [0., 0.], [(-5., 0.5), (-5., 5.)])
    assert record.x[0] == pytest.approx(0.5)
    assert record.converged


def test_projected_gradient_norm():
    bounds = [(0., 1.), (0., 1.)]
    assert projected_gradient_norm(np.array([1., 0.5]), np.array([3., 0.]),
                                   bounds) == 0.
    assert projected_gradient_norm(np.array([0., 0.5]), np.array([3., 0.]),
                                   bounds) == 3.


def test_all_starts_failing():
    def broken(x):
        raise ValueError('outside the domain')

    with pytest.raises(ConvergenceError):
        QuasiNewton().maximize(broken, [[0.], [1.]], [(-1., 1.)])


def test_nonfinite_points_are_avoided():
    def guarded(x):
        if x[0] > 2:
            return np.nan, np.zeros(1)
        return concave(x)

    record = QuasiNewton().maximize(guarded, [[-3.]], [(-5., 5.)])
    assert record.x[0] == pytest.approx(1., abs=1e-5)
