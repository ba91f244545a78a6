# -*- coding: utf-8 -*-
# 数值后端：正态函数、二元正态、积分节点、二分法

import numpy as np
import pytest
from scipy.stats import multivariate_normal
from copula4probit.backend import norm_cdf, norm_ppf, bvn_cdf, bvn_pdf
from copula4probit.backend import gauss_legendre, bisect
from copula4probit.backend import tanh_bijection, exp_bijection


def test_norm_round_trip():
    u = np.linspace(0.001, 0.999, 50)
    assert np.allclose(norm_cdf(norm_ppf(u)), u, atol=1e-14)


@pytest.mark.parametrize('r', [-0.99, -0.6, -0.2, 0.1, 0.5, 0.8, 0.95])
def test_bvn_cdf_at_origin(r):
    expected = 0.25 + np.arcsin(r) / (2 * np.pi)
    assert float(bvn_cdf(0., 0., r)) == pytest.approx(expected, abs=1e-13)


def test_bvn_cdf_independence():
    h = np.array([-2., -0.5, 0.3, 1.7])
    k = np.array([0.4, -1.2, 2.5, 0.])
    assert np.allclose(bvn_cdf(h, k, 0.), norm_cdf(h) * norm_cdf(k),
                       atol=1e-15)


@pytest.mark.parametrize('r', [-0.8, 0.3, 0.7, 0.97])
def test_bvn_cdf_matches_scipy(r):
    mvn = multivariate_normal([0., 0.], [[1., r], [r, 1.]])
    for h, k in [(-1., 0.5), (1.2, -0.3), (2., 2.), (-0.4, -1.5)]:
        assert float(bvn_cdf(h, k, r)) == pytest.approx(mvn.cdf([h, k]),
                                                        abs=2e-5)


def test_bvn_pdf_matches_scipy():
    r = 0.6
    mvn = multivariate_normal([0., 0.], [[1., r], [r, 1.]])
    assert bvn_pdf(0.3, -1.1, r) == pytest.approx(mvn.pdf([0.3, -1.1]),
                                                  rel=1e-12)


def test_gauss_legendre_exact_for_polynomials():
    x, w = gauss_legendre(5, 0., 1.)
    assert w.dot(x**9) == pytest.approx(0.1, abs=1e-14)
    x, w = gauss_legendre(8, -2., 3.)
    assert w.sum() == pytest.approx(5., abs=1e-13)


def test_bisect_vectorized():
    roots = bisect(lambda x: x**3, np.array([1., 8., 27.]), 0., 5.,
                   tol=1e-12)
    assert np.allclose(roots, [1., 2., 3.], atol=1e-10)


def test_bijection_derivatives():
    h = 1e-6
    for eta in (-2., 0., 0.7):
        _, d = tanh_bijection(eta, 0.9)
        fd = (tanh_bijection(eta + h, 0.9)[0] -
              tanh_bijection(eta - h, 0.9)[0]) / (2 * h)
        assert d == pytest.approx(fd, rel=1e-7)
        value, d = exp_bijection(eta, 1.)
        assert value > 1 and d == pytest.approx(value - 1.)
