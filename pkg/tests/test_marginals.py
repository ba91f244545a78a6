# -*- coding: utf-8 -*-
"""边缘分布：G变换、标准化、正态混合的校准、筛分布
"""

import numpy as np
import pytest
from scipy import integrate, stats
from copula4probit.marginals import get_transform, transforms, standardized
from copula4probit.marginals import Normal, StudentT, NormalMixture
from copula4probit.marginals import LocationScale, SieveMarginal
from copula4probit.marginals import calibrate_mixture, sieve_order
from copula4probit.marginals import sieve_constant
from copula4probit.snippets import DomainError, NoRootError


def _moments(marginal):
    mean = integrate.quad(lambda x: x * marginal.pdf(x), -np.inf, np.inf)[0]
    var = integrate.quad(lambda x: (x - mean)**2 * marginal.pdf(x), -np.inf,
                         np.inf)[0]
    return mean, var


@pytest.mark.parametrize('name', sorted(transforms))
def test_transform_round_trip(name):
    g = get_transform(name)
    x = np.linspace(-4., 4., 41)
    assert np.allclose(g.ppf(g.cdf(x)), x, atol=1e-8)
    h = 1e-6
    assert np.allclose(g.pdf(x), (g.cdf(x + h) - g.cdf(x - h)) / (2 * h),
                       atol=1e-8)


def test_unknown_transform():
    with pytest.raises(DomainError):
        get_transform('cauchy')


@pytest.mark.parametrize('name', ['normal', 't3', 'logistic'])
def test_standardized_has_unit_variance(name):
    mean, var = _moments(standardized(name))
    assert mean == pytest.approx(0., abs=1e-6)
    assert var == pytest.approx(1., abs=1e-4)


def test_location_scale_jacobian():
    law = Normal(0.3, 1.7)
    x = np.linspace(-3., 3., 13)
    jac = law.cdf_jac(x)
    h = 1e-6
    for j in range(2):
        step = np.zeros(2)
        step[j] = h
        up = law.with_params(law.params + step).cdf(x)
        down = law.with_params(law.params - step).cdf(x)
        assert np.allclose(jac[:, j], (up - down) / (2 * h), atol=1e-8)


def test_student_t():
    law = StudentT(3.)
    assert law.n_params == 0
    assert float(law.cdf(0.)) == pytest.approx(0.5)
    assert float(law.cdf(1.1) - law.cdf(0.)) == pytest.approx(0.3242,
                                                              abs=5e-4)
    with pytest.raises(DomainError):
        StudentT(-1.)


def test_normal_mixture_is_standardized():
    law = NormalMixture([0.6, 0.4], [-1., 1.5], 0.5)
    mean, var = _moments(law)
    assert mean == pytest.approx(0., abs=1e-6)
    assert var == pytest.approx(1., abs=1e-6)
    u = np.array([0.05, 0.3, 0.5, 0.9])
    assert np.allclose(law.cdf(law.ppf(u)), u, atol=1e-10)


def test_normal_mixture_rejects_bad_weights():
    with pytest.raises(DomainError):
        NormalMixture([0.6, 0.6], [0., 1.], 1.)
    with pytest.raises(DomainError):
        NormalMixture([0.5, 0.5], [0., 1.], -1.)


def test_calibrate_mixture():
    law = calibrate_mixture(0.1066, 1.1)
    assert float(law.cdf(1.1) - law.cdf(0.)) == pytest.approx(0.1066,
                                                              abs=1e-10)
    assert 0.18 < law.sigmas[0] < 0.25


def test_calibrate_mixture_unreachable():
    with pytest.raises(NoRootError):
        calibrate_mixture(0.9, 1.1)


def test_normal_ate():
    law = Normal(0., 1., free=False)
    assert float(law.cdf(1.1) - law.cdf(0.)) == pytest.approx(0.3643,
                                                              abs=5e-4)


# ----------------------------------------------------------------------
# 筛分布
# ----------------------------------------------------------------------


@pytest.fixture
def sieve():
    return SieveMarginal('normal', [1., 0.5, -0.3])


def test_sieve_normalization(sieve):
    assert float(sieve.H(0.)) == 0.
    assert float(sieve.H(1.)) == pytest.approx(1., abs=1e-12)
    assert sieve.total_mass() == pytest.approx(1., abs=1e-12)
    mass = integrate.quad(sieve.h, 0., 1.)[0]
    assert mass == pytest.approx(1., abs=1e-12)
    t = np.linspace(0., 1., 101)
    assert np.all(np.diff(sieve.H(t)) >= 0)
    assert np.all(sieve.h(t) >= 0)


def test_sieve_scale_invariance(sieve):
    scaled = SieveMarginal('normal', 2.5 * sieve.coeffs)
    x = np.linspace(-3., 3., 13)
    assert np.allclose(scaled.cdf(x), sieve.cdf(x), atol=1e-14)
    assert np.allclose(scaled.coeffs, sieve.coeffs)


def test_sieve_order_zero_is_g():
    for name in transforms:
        law = SieveMarginal(name, [1.])
        x = np.linspace(-3., 3., 13)
        assert np.allclose(law.cdf(x), get_transform(name).cdf(x),
                           atol=1e-14)
        assert law.n_params == 0


def test_sieve_density_and_quantile(sieve):
    x = np.linspace(-3., 3., 13)
    h = 1e-6
    fd = (sieve.cdf(x + h) - sieve.cdf(x - h)) / (2 * h)
    assert np.allclose(sieve.pdf(x), fd, atol=1e-8)
    u = np.array([0.01, 0.2, 0.5, 0.77, 0.99])
    assert np.allclose(sieve.cdf(sieve.ppf(u)), u, atol=1e-10)


def test_sieve_jacobian(sieve):
    t = np.linspace(0.02, 0.98, 25)
    jac = sieve.H_jac(t)
    assert jac.shape == (25, 2)
    h = 1e-6
    for j in range(2):
        step = np.zeros(2)
        step[j] = h
        up = sieve.with_params(sieve.params + step).H(t)
        down = sieve.with_params(sieve.params - step).H(t)
        assert np.allclose(jac[:, j], (up - down) / (2 * h), atol=1e-8)


def test_sieve_rejects_zero_leading_coefficient():
    with pytest.raises(DomainError):
        SieveMarginal('normal', [0., 1.])
    law = SieveMarginal('normal', [1., 0.])
    assert np.allclose(law.with_params(law.params).coeffs, law.coeffs)


def test_sieve_with_order(sieve):
    longer = sieve.with_order(4)
    assert longer.order == 4
    assert np.allclose(longer.coeffs, [1., 0.5, -0.3, 0., 0.])
    x = np.linspace(-3., 3., 13)
    assert np.allclose(longer.cdf(x), sieve.cdf(x), atol=1e-14)
    shorter = sieve.with_order(1)
    assert np.allclose(shorter.coeffs, [1., 0.5])
    assert len(longer.bounds()) == 4


def test_sieve_legendre_basis():
    # ψ₁ = √3(2t-1)，h = (1 + a√3(2t-1))^2 / (1 + a^2)
    a = 0.4
    law = SieveMarginal('normal', [1., a])
    t = np.linspace(0., 1., 11)
    expected = (1 + a * np.sqrt(3.) * (2 * t - 1))**2 / (1 + a**2)
    assert np.allclose(law.h(t), expected, atol=1e-13)
    high = SieveMarginal('normal', [1., 3., -40., 25., 7., -60.])
    assert high.total_mass() == pytest.approx(1., abs=1e-10)
    assert integrate.quad(high.h, 0., 1., limit=200)[0] == pytest.approx(
        1., abs=1e-8)


def test_sieve_with_flat_density_is_g():
    # h ≡ 1时F就是G本身，t3尾部也不例外
    law = SieveMarginal('t3', [1., 0., 0., 0.])
    x = np.linspace(-30., 30., 61)
    assert np.allclose(law.h(np.linspace(0., 1., 11)), 1., atol=1e-14)
    assert np.allclose(law.cdf(x), stats.t.cdf(x, 3), atol=1e-12)
    assert np.allclose(law.pdf(x), stats.t.pdf(x, 3), atol=1e-12)


def test_sieve_rejects_zero_polynomial():
    with pytest.raises(DomainError):
        SieveMarginal('normal', [0., 0.])


def test_sieve_order():
    assert sieve_order(500) == 2
    assert sieve_order(500, 'theory') == 2
    orders = [sieve_order(n) for n in (50, 200, 500, 2000, 10**5)]
    assert orders == sorted(orders)
    assert sieve_order(500, c=0.) == 0
    with pytest.raises(DomainError):
        sieve_order(500, 'bic')


def test_sieve_constant():
    c = sieve_constant(6, 500)
    assert sieve_order(500, c=c) == 6
    assert sieve_order(1000, c=c) == 7
    assert sieve_order(500, 'theory', c=sieve_constant(4, 500, 'theory')) == 4


def test_location_scale_rejects_bad_scale():
    with pytest.raises(DomainError):
        LocationScale('normal', 0., 0.)
