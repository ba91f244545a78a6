# -*- coding: utf-8 -*-
"""识别实验：二值X反例、失效点、失效分布、正性扫描
"""

import numpy as np
import pytest
from copula4probit.identlab import default_counterexample, BinaryCounterexample
from copula4probit.identlab import verify_binary_counterexample
from copula4probit.identlab import counterexample_report, failure_point
from copula4probit.identlab import failure_delta, solve_failure_distribution
from copula4probit.identlab import positivity_scan
from copula4probit.snippets import DomainError, ConvergenceError


def test_counterexample_is_observationally_equivalent():
    example = default_counterexample()
    assert example.distinct
    assert verify_binary_counterexample(example) < 1e-14
    p = example.probabilities('a')
    assert np.allclose(p[0], [1. / 9, 2. / 9, 2. / 9, 4. / 9], atol=1e-15)
    assert np.allclose(p.sum(axis=1), 1.)
    report = counterexample_report(example)
    assert report['passed'] and len(report['probabilities']) == 8
    assert report['example']['copula_b'] == 'comonotone'


def test_perturbed_counterexample_is_detected():
    example = default_counterexample()
    set_b = example.set_b[:4] + (-4. / 9 + 0.01, 1.)
    perturbed = BinaryCounterexample(example.set_a, set_b)
    assert verify_binary_counterexample(perturbed) > 1e-3
    assert not counterexample_report(perturbed)['passed']


def test_identical_sets_agree():
    example = default_counterexample()
    same = BinaryCounterexample(example.set_a, example.set_a)
    assert verify_binary_counterexample(same) == 0.
    assert not same.distinct


def test_counterexample_rejects_bad_indices():
    with pytest.raises(DomainError):
        BinaryCounterexample((0., 0.5, 0.5, 0.5, 0., 0.),
                             (0.5, 0.5, 0.5, 0.5, 0., 1.))


def test_failure_point():
    t_star, s_dagger = failure_point(0.5, 0.5)
    assert t_star == pytest.approx(0.75)
    assert s_dagger == pytest.approx(0.25)


def test_failure_delta_uniform():
    q = np.array([1. / 3, 2. / 3])
    t = np.array([1. / 3, 2. / 3])
    delta = failure_delta(q, t, lambda u: u)
    assert np.allclose(delta, -4. / 9, atol=1e-15)


def test_failure_distribution():
    result = solve_failure_distribution()
    assert result.converged
    assert result.residual < 1e-6
    assert result.increasing
    assert result.delta1 < 0
    assert 0 < result.deviation() < 0.1
    assert result.monotone
    assert np.all(np.diff(result.residuals) < 0)
    assert np.all((result.cdf > 0) & (result.cdf < 1))
    record = result.to_dict()
    assert record['iterations'] == len(record['residual_history'])
    assert len(result.records()) == len(result.grid)


def test_failure_distribution_arguments():
    with pytest.raises(DomainError):
        solve_failure_distribution(damping=0.)
    with pytest.raises(DomainError):
        solve_failure_distribution(delta1=0.5)


def test_failure_distribution_reports_nonconvergence():
    with pytest.raises(ConvergenceError):
        solve_failure_distribution(max_iter=3)


@pytest.mark.parametrize('family', ['gaussian', 'frank', 'clayton', 'gumbel'])
def test_positivity_scan(family):
    from copula4probit.copulas import get_copula
    cop = get_copula(family)
    rhos = [cop.from_spearman(r) for r in (0.1, 0.4, 0.8)]
    report = positivity_scan(family, rhos, np.linspace(0.05, 0.95, 19))
    assert report.passed
    assert report.to_dict()['n_violations'] == 0
