# -*- coding: utf-8 -*-
# 测试公用的fixture与slow标记

import numpy as np
import pytest
from copula4probit.copulas import get_copula
from copula4probit.marginals import LocationScale
from copula4probit.likelihood import Theta, Normalization
from copula4probit.estimators import FitOptions
from copula4probit.simulation import load_scenario, simulate_dataset


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False,
                     help='run the Monte Carlo acceptance tests')


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip = pytest.mark.skip(reason='needs --runslow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip)


@pytest.fixture(scope='session')
def table1_scenario():
    return load_scenario('table1-gaussian', n=500)


@pytest.fixture(scope='session')
def table1_data(table1_scenario):
    """主表设计（Gaussian copula、正态边缘）下的一份n=500样本
    """
    return simulate_dataset(table1_scenario, 0)


@pytest.fixture(scope='session')
def small_data(table1_data):
    return table1_data.take(np.arange(200))


@pytest.fixture
def pinned():
    return Normalization.fixed_coefficient({'x1': -1.}, {'x1': -1.})


@pytest.fixture
def quick():
    return FitOptions(n_starts=1)


def make_theta(copula='gaussian', rho_sp=0.5, marg_eps=None, marg_nu=None,
               delta1=1.1, gamma=0.8):
    """主表设计的真值参数包，x1的系数固定为-1
    """
    cop = get_copula(copula)
    rho = cop.from_spearman(rho_sp)
    marg_eps = marg_eps or LocationScale('normal', 0., 1., free=False)
    marg_nu = marg_nu or LocationScale('normal', 0., 1., free=False)
    return Theta([-1.], [-1.], delta1, [gamma], rho, marg_eps, marg_nu, cop,
                 Normalization.fixed_coefficient({'x1': -1.}, {'x1': -1.}),
                 ['x1'], ['z1'])


@pytest.fixture
def theta_at():
    return make_theta
