#! -*- coding: utf-8 -*-

from setuptools import setup, find_packages

setup(
    name='copula4probit',
    version='0.1.0',
    description='copula-based triangular binary choice models',
    long_description='copula4probit: parametric and sieve ML for binary '
    'outcomes with a binary endogenous regressor',
    license='Apache License 2.0',
    install_requires=['numpy', 'scipy', 'pandas'],
    extras_require={'test': ['pytest']},
    packages=find_packages(exclude=['tests']),
    entry_points={
        'console_scripts': ['copula4probit=copula4probit.cli:main'],
    })
