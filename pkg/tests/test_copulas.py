# -*- coding: utf-8 -*-
"""copula族：分布函数的公理、解析偏导、Spearman映射、抽样、SI序
"""

import numpy as np
import pytest
from scipy import stats
from copula4probit.copulas import get_copula, copulas, Copula
from copula4probit.copulas import DependenceParam, si_ordering_scan
from copula4probit.copulas import comonotone_cdf, countermonotone_cdf
from copula4probit.snippets import DomainError, NoRootError

params = {
    'gaussian': [-0.6, -0.2, 0.3, 0.7],
    'frank': [-6., -1., 2., 8.],
    'clayton': [0.3, 1., 3., 8.],
    'gumbel': [1.1, 1.5, 2.5, 5.],
}

cases = [(f, r) for f in sorted(params) for r in params[f]]


# ----------------------------------------------------------------------
# 分布函数
# ----------------------------------------------------------------------


@pytest.mark.parametrize('family,rho', cases)
def test_boundary_conditions(family, rho):
    cop = get_copula(family)
    u = np.linspace(0., 1., 33)
    assert np.all(cop.cdf(u, 0., rho) == 0)
    assert np.all(cop.cdf(0., u, rho) == 0)
    assert np.allclose(cop.cdf(u, 1., rho), u, atol=1e-12)
    assert np.allclose(cop.cdf(1., u, rho), u, atol=1e-12)


@pytest.mark.parametrize('family,rho', cases)
def test_two_increasing(family, rho):
    cop = get_copula(family)
    u = np.linspace(0., 1., 33)
    u1, u2 = np.meshgrid(u, u, indexing='ij')
    c = cop.cdf(u1, u2, rho)
    volume = c[1:, 1:] - c[:-1, 1:] - c[1:, :-1] + c[:-1, :-1]
    assert volume.min() >= -1e-12


@pytest.mark.parametrize('family,rho', cases)
def test_frechet_bounds(family, rho):
    cop = get_copula(family)
    u1, u2 = np.meshgrid(np.linspace(0.05, 0.95, 19),
                         np.linspace(0.05, 0.95, 19))
    c = cop.cdf(u1, u2, rho)
    assert np.all(c <= comonotone_cdf(u1, u2) + 1e-12)
    assert np.all(c >= countermonotone_cdf(u1, u2) - 1e-12)


def test_known_values():
    assert float(get_copula('gaussian').cdf(0.3, 0.7, 0.)) == \
        pytest.approx(0.21, abs=1e-15)
    assert float(get_copula('frank').cdf(0.5, 0.5, 5.)) == \
        pytest.approx(0.37717, abs=5e-5)
    assert float(get_copula('gaussian').cdf(0.4, 1., 0.5)) == 0.4


def test_invalid_inputs():
    with pytest.raises(DomainError):
        get_copula('student')
    with pytest.raises(DomainError):
        get_copula('gaussian').cdf(np.nan, 0.5, 0.2)
    with pytest.raises(DomainError):
        get_copula('clayton').partials(0., 0.5, 2.)
    for family, rho in [('gaussian', 1.5), ('clayton', -1.),
                        ('gumbel', 0.5), ('frank', np.inf)]:
        with pytest.raises(DomainError):
            DependenceParam(family, rho)


@pytest.mark.parametrize('rho', [60., 300., -60., -300.])
def test_frank_large_parameter(rho):
    cop = get_copula('frank')
    u1, u2 = np.meshgrid(np.linspace(0.05, 0.95, 7), np.linspace(0.05, 0.95, 7))
    c = cop.cdf(u1, u2, rho)
    assert np.all(np.isfinite(c))
    assert np.all(c <= comonotone_cdf(u1, u2) + 1e-12)
    assert np.all(c >= countermonotone_cdf(u1, u2) - 1e-12)
    bound = comonotone_cdf if rho > 0 else countermonotone_cdf
    assert np.max(np.abs(c - bound(u1, u2))) < 2. / abs(rho)
    for d in cop.partials(u1, u2, rho):
        assert np.all(np.isfinite(d))
    assert float(cop.cdf(0.3, 0.6, 60.)) == pytest.approx(0.3, abs=0.02)
    v = cop.conditional_inverse(u1 * 0 + 0.5, u1, rho)
    assert np.all(np.isfinite(v))


def test_frank_reflection():
    cop = get_copula('frank')
    u1, u2 = np.meshgrid(np.linspace(0.05, 0.95, 7), np.linspace(0.05, 0.95, 7))
    assert np.allclose(cop.cdf(u1, u2, -3.), u1 - cop.cdf(u1, 1 - u2, 3.),
                       atol=1e-14)
    assert float(cop.cdf(0.5, 0.5, -1.)) == pytest.approx(0.219047, abs=1e-6)


def test_frank_strong_dependence_spearman():
    cop = get_copula('frank')
    assert cop.spearman_rho(500.) > 0.99
    assert cop.spearman_rho(-500.) < -0.99
    for rho_sp in (0.995, -0.995):
        rho = cop.from_spearman(rho_sp)
        assert abs(rho) > 50
        assert cop.spearman_rho(rho) == pytest.approx(rho_sp, abs=1e-6)


# ----------------------------------------------------------------------
# 解析偏导
# ----------------------------------------------------------------------


@pytest.mark.parametrize('family,rho', cases)
def test_partials_match_finite_differences(family, rho):
    cop = get_copula(family)
    u1, u2 = np.meshgrid(np.linspace(0.1, 0.9, 9), np.linspace(0.1, 0.9, 9))
    c1, c2, crho = cop.partials(u1, u2, rho)
    h = 1e-6
    fd1 = (cop.cdf(u1 + h, u2, rho) - cop.cdf(u1 - h, u2, rho)) / (2 * h)
    fd2 = (cop.cdf(u1, u2 + h, rho) - cop.cdf(u1, u2 - h, rho)) / (2 * h)
    hr = h * max(1., abs(rho))
    fdr = (cop.cdf(u1, u2, rho + hr) - cop.cdf(u1, u2, rho - hr)) / (2 * hr)
    assert np.max(np.abs(c1 - fd1) / (1 + np.abs(fd1))) < 1e-6
    assert np.max(np.abs(c2 - fd2) / (1 + np.abs(fd2))) < 1e-6
    assert np.max(np.abs(crho - fdr) / (1 + np.abs(fdr))) < 1e-6


@pytest.mark.parametrize('family', sorted(copulas))
def test_partials_at_independence(family):
    cop = get_copula(family)
    c1, c2, _ = cop.partials(0.3, 0.7, cop.independence)
    assert c1 == pytest.approx(0.7)
    assert c2 == pytest.approx(0.3)


@pytest.mark.parametrize('family,rho', cases)
def test_conditional_inverse(family, rho):
    cop = get_copula(family)
    w, u1 = np.meshgrid(np.linspace(0.05, 0.95, 7), np.linspace(0.05, 0.95, 7))
    u2 = cop.conditional_inverse(w, u1, rho)
    assert np.allclose(cop.conditional_cdf(u1, u2, rho), w, atol=1e-7)


@pytest.mark.parametrize('family', sorted(copulas))
def test_unconstrained_scale(family):
    cop = get_copula(family)
    for rho in params[family]:
        eta = cop.to_unconstrained(rho)
        assert cop.from_unconstrained(eta) == pytest.approx(rho, rel=1e-9)
        h = 1e-6
        fd = (cop.from_unconstrained(eta + h) -
              cop.from_unconstrained(eta - h)) / (2 * h)
        assert cop.drho_deta(eta) == pytest.approx(fd, rel=1e-6)


# ----------------------------------------------------------------------
# Spearman与Kendall
# ----------------------------------------------------------------------


def test_gaussian_spearman_closed_form():
    cop = get_copula('gaussian')
    assert cop.from_spearman(0.5) == pytest.approx(0.5176, abs=1e-4)
    rho = cop.from_spearman(0.5)
    assert Copula.spearman_rho(cop, rho) == pytest.approx(0.5, abs=1e-3)


@pytest.mark.parametrize('family', sorted(copulas))
def test_spearman_round_trip(family):
    cop = get_copula(family)
    grid = [0.2, 0.5, 0.7]
    if family in ('gaussian', 'frank'):
        grid += [-0.5, -0.2]
    for rho_sp in grid:
        rho = cop.from_spearman(rho_sp)
        assert cop.spearman_rho(rho) == pytest.approx(rho_sp, abs=1e-6)
    assert cop.from_spearman(0.) == cop.independence


@pytest.mark.parametrize('family', ['clayton', 'gumbel'])
def test_negative_spearman_unreachable(family):
    with pytest.raises(NoRootError):
        get_copula(family).from_spearman(-0.3)


def test_spearman_outside_range():
    with pytest.raises(NoRootError):
        get_copula('frank').from_spearman(1.)


def test_kendall_closed_forms():
    assert get_copula('clayton').kendall_tau(2.) == pytest.approx(0.5)
    assert get_copula('gumbel').kendall_tau(2.) == pytest.approx(0.5)
    frank = get_copula('frank')
    assert frank.kendall_tau(5.736) == pytest.approx(0.5, abs=2e-3)
    assert frank.kendall_tau(-3.) == pytest.approx(-frank.kendall_tau(3.))


# ----------------------------------------------------------------------
# 抽样
# ----------------------------------------------------------------------


@pytest.mark.parametrize('family', sorted(copulas))
def test_sample_rank_correlation(family):
    cop = get_copula(family)
    rho = cop.from_spearman(0.5)
    u = cop.sample(rho, 20000, seed=1)
    assert u.shape == (20000, 2)
    assert np.all((u > 0) & (u < 1))
    assert stats.spearmanr(u[:, 0], u[:, 1])[0] == pytest.approx(0.5,
                                                                 abs=0.02)


def test_sample_reproducible():
    cop = get_copula('clayton')
    assert np.array_equal(cop.sample(2., 50, seed=7), cop.sample(2., 50,
                                                                 seed=7))


@pytest.mark.slow
def test_clayton_spearman_monte_carlo():
    cop = get_copula('clayton')
    u = cop.sample(2., 10**6, seed=3)
    assert stats.spearmanr(u[:, 0], u[:, 1])[0] == pytest.approx(
        cop.spearman_rho(2.), abs=0.005)


def test_comonotone():
    cop = get_copula('comonotone')
    u = cop.sample(None, 100, seed=0)
    assert np.array_equal(u[:, 0], u[:, 1])
    assert cop.spearman_rho() == 1.
    with pytest.raises(DomainError):
        cop.partials(0.3, 0.4)


# ----------------------------------------------------------------------
# SI序
# ----------------------------------------------------------------------


@pytest.mark.parametrize('family', sorted(copulas))
def test_dependence_ordering(family):
    cop = get_copula(family)
    if family in ('clayton', 'gumbel'):
        grid = np.linspace(0.1, 0.8, 9)
    else:
        grid = np.linspace(-0.8, 0.8, 9)
    rhos = [cop.from_spearman(r) for r in grid]
    report = si_ordering_scan(family, rhos, np.linspace(0.05, 0.95, 19))
    assert report.n_points == 19 * 19 * 9
    assert report.passed
    assert report.min_crho > 0
