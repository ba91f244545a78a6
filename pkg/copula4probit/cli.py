#! -*- coding: utf-8 -*-
# 命令行：estimate、simulate、identlab、copula、presets

import argparse
import json
import logging
import sys
import numpy as np
from copula4probit import __version__
from copula4probit.backend import default_threads
from copula4probit.copulas import get_copula, copulas
from copula4probit.marginals import transforms
from copula4probit.likelihood import Dataset, Normalization
from copula4probit.estimators import ModelSpec, FitOptions, fit_model
from copula4probit.estimators import pin_from_parametric
from copula4probit.inference import standard_errors, weighted_bootstrap
from copula4probit import simulation, identlab
from copula4probit.snippets import DomainError, DataError, NoRootError
from copula4probit.snippets import ConvergenceError, setup_logging
from copula4probit.snippets import dumps, write_jsonl, format_table

logger = logging.getLogger(__name__)

# 退出码
EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3

# estimate的缺省配置，依次被--config文件和命令行参数覆盖
estimate_defaults = {
    'model': ['parametric'],
    'copula': 'gaussian',
    'g': 'normal',
    'kn': 'auto',
    'boot': 0,
    'seed': 0,
    'starts': 5,
    'x': [],
    'z': [],
    'fix_alpha': [],
    'fix_beta': [],
    'at': None,
    'weights': 'exp',
}


def _emit(records, out):
    if out:
        write_jsonl(out, records)
    else:
        for record in records:
            logger.debug(dumps(record))


def _pins(pairs):
    """把['x1=-1', ...]解析成{'x1': -1.0}
    """
    out = {}
    for pair in pairs or []:
        name, sep, value = pair.partition('=')
        if not sep:
            raise DomainError('expected column=value, got %r' % pair)
        out[name.strip()] = float(value)
    return out


def _resolve(args, defaults):
    """缺省值 < 配置文件 < 命令行参数
    """
    config = dict(defaults)
    if getattr(args, 'config', None):
        with open(args.config, encoding='utf-8') as f:
            config.update(json.load(f))
    for key in defaults:
        value = getattr(args, key, None)
        if value is not None and value != []:
            config[key] = value
    return config


def _normalization(config, dataset, model):
    fixed_alpha, fixed_beta = _pins(config['fix_alpha']), _pins(
        config['fix_beta'])
    if fixed_alpha or fixed_beta:
        return Normalization.fixed_coefficient(fixed_alpha, fixed_beta)
    if model == 'parametric':
        return Normalization.mean_var_unit()
    # 筛模型缺省：第一个x列的系数固定为参数MeanVarUnit估计
    if not dataset.x_names:
        raise DomainError('the sieve model needs at least one x column')
    return pin_from_parametric(dataset, dataset.x_names[0], config['copula'],
                               config['g'])


def _ate_point(fit, at):
    if at is None:
        return fit.dataset.x_means()
    x = np.asarray(at, dtype=float)
    if not fit.spec.normalization.is_fixed:
        x = np.concatenate([[1.], x])
    return x


def _targets(theta):
    targets = ['delta1', 'rho', 'rho_sp', 'ate']
    fa, fb = theta.free_index('alpha'), theta.free_index('beta')
    targets += ['alpha:%s' % theta.x_names[j] for j in fa]
    targets += ['beta:%s' % theta.x_names[j] for j in fb]
    targets += ['gamma:%s' % name for name in theta.z_names]
    return targets


def _estimate_one(dataset, config, model, threads):
    kn = config['kn']
    kn = kn if kn == 'auto' else int(kn)
    if kn != 'auto' and kn < 0:
        raise DomainError('k_n must be nonnegative, got %d' % kn)
    norm = _normalization(config, dataset, model)
    spec = ModelSpec(config['copula'], model, config['g'], kn, norm,
                     location_scale=True)
    options = FitOptions(n_starts=config['starts'], seed=config['seed'])
    fit = fit_model(dataset, spec, options)
    if not fit.converged:
        raise ConvergenceError('%s fit did not converge (|pg|=%.2e)' %
                               (model, fit.gradient_norm))
    theta = fit.theta_hat
    x = _ate_point(fit, config['at'])
    record = {'type': 'estimate', 'version': __version__, 'config': config,
              'fit': fit.to_dict(), 'ate': fit.ate(x), 'ate_at': x}
    try:
        record['se'] = standard_errors(fit, x)
    except DomainError as e:
        logger.warning('asymptotic standard errors unavailable: %s', e)
        record['se'] = None
    if config['boot']:
        boot = weighted_bootstrap(dataset, spec, _targets(theta),
                                  config['boot'], config['seed'],
                                  config['weights'], x=x, options=options,
                                  fit=fit, workers=threads)
        record['bootstrap'] = boot.to_dict()
    return record


def _estimate_table(record):
    fit = record['fit']
    theta = fit['theta']
    se = record['se'] or {}
    rows = []
    for which in ('alpha', 'beta'):
        for name, value in theta[which].items():
            rows.append(['%s:%s' % (which, name), value,
                         se.get('%s:%s' % (which, name), '')])
    rows.append(['delta1', theta['delta1'], se.get('delta1', '')])
    for name, value in theta['gamma'].items():
        rows.append(['gamma:%s' % name, value, se.get('gamma:%s' % name, '')])
    rows.append(['rho', theta['rho'], se.get('rho', '')])
    rows.append(['rho_sp', theta['rho_sp'], se.get('rho_sp', '')])
    rows.append(['ate', record['ate'], se.get('ate', '')])
    title = '%s model, %s copula, loglik=%.6f, n=%d' % (
        fit['model'], theta['copula'], fit['loglik'], fit['n_obs'])
    if fit['kn'] is not None:
        title += ', k_n=%d' % fit['kn']
    lines = [format_table(['parameter', 'estimate', 'se'], rows, title)]
    if 'bootstrap' in record:
        boot = record['bootstrap']
        rows = [[t, v['estimate'], v['se']] + v['pci'].get('0.95', ['', ''])
                for t, v in sorted(boot['targets'].items())]
        lines.append(format_table(
            ['target', 'estimate', 'boot se', 'pci 2.5%', 'pci 97.5%'], rows,
            'weighted bootstrap, B=%d (percentile intervals recommended)' %
            boot['B']))
    return '\n\n'.join(lines)


def cmd_estimate(args):
    config = _resolve(args, estimate_defaults)
    for key in ('y', 'd'):
        config[key] = getattr(args, key)
    if not config['z']:
        logger.warning('no instrument columns given')
    dataset = Dataset.from_csv(args.csv, config['y'], config['d'],
                               config['x'], config['z'])
    pinned = list(_pins(config['fix_alpha'])) + list(_pins(config['fix_beta']))
    for name in pinned:
        if name not in dataset.x_names:
            raise DataError('pinned column %r is not an x column' % name)
    if isinstance(config['model'], str):
        config['model'] = [config['model']]
    threads = args.threads or default_threads
    records = []
    for model in config['model']:
        try:
            record = _estimate_one(dataset, config, model, threads)
        except (ArithmeticError, np.linalg.LinAlgError) as e:
            raise ConvergenceError('%s fit failed: %s' % (model, e))
        records.append(record)
        print(_estimate_table(record))
        print()
    _emit(records, args.out)
    return EXIT_OK


def cmd_simulate(args):
    overrides = {'n': args.n, 'seed': args.seed, 'boot': args.boot,
                 'replications': args.reps}
    if args.full:
        overrides['replications'] = simulation.full_replications
    scenario = simulation.load_scenario(args.preset, **overrides)
    threads = args.threads or default_threads
    header = {'type': 'config', 'version': __version__,
              'scenario': scenario.to_dict()}
    if scenario.boot:
        summary = simulation.run_bootstrap_coverage(scenario, workers=threads)
        print(summary.format())
        rows = summary.records()
    else:
        summary = simulation.run_monte_carlo(scenario, workers=threads)
        print(simulation.format_summary(summary))
        rows = simulation.summary_records(summary)
    for row in rows:
        row['version'] = __version__
    _emit([header] + rows, args.out)
    return EXIT_OK


def cmd_identlab(args):
    if args.demo == 'binary-counterexample':
        example = identlab.default_counterexample()
        report = identlab.counterexample_report(example)
        rows = [[r['x'], r['cell'], r['p_a'], r['p_b']]
                for r in report['probabilities']]
        print(format_table(['x', 'cell', 'set A', 'set B'], rows,
                           'binary counterexample', '%.12f'))
        print('max discrepancy %.1e ... %s' %
              (report['max_discrepancy'],
               'PASS' if report['passed'] else 'FAIL'))
        passed = report['passed']
        records = [report]
    elif args.demo == 'failure-distribution':
        result = identlab.solve_failure_distribution()
        print('delta1* = %.6f, residual %.2e after %d iterations, '
              'sup|F - Phi| on [-3, 3] = %.4f' %
              (result.delta1, result.residual, result.iterations,
               result.deviation()))
        passed = result.converged and result.increasing
        records = [result.to_dict()] + result.records()
    else:
        families = [args.copula] if args.copula else sorted(copulas)
        records, passed = [], True
        for family in families:
            report = identlab.positivity_scan(family, _rho_grid(family),
                                              np.linspace(0.05, 0.95, 19))
            print('%-8s %d points, %d violations, min Crho %.3e ... %s' %
                  (family, report.n_points, len(report.violations),
                   report.min_crho, 'PASS' if report.passed else 'FAIL'))
            passed = passed and report.passed
            records.append(report.to_dict())
    # 识别实验都是确定性计算，seed记为None
    config = {'demo': args.demo, 'copula': args.copula}
    for record in records:
        record.update(version=__version__, config=config, seed=None)
    _emit(records, args.out)
    return EXIT_OK if passed else EXIT_NUMERIC


def _rho_grid(family):
    """每族9个ρ，对应ρ_sp从-0.8到0.8（Clayton、Gumbel只取正值）
    """
    cop = get_copula(family)
    if cop.name in ('clayton', 'gumbel'):
        grid = np.linspace(0.1, 0.8, 9)
    else:
        grid = np.linspace(-0.8, 0.8, 9)
    return [cop.from_spearman(r) if r != 0 else cop.independence
            for r in grid]


def cmd_copula(args):
    cop = get_copula(args.family)
    values = [float(v) for v in args.values]
    if args.tool == 'spearman':
        result = cop.spearman_rho(values[0])
    elif args.tool == 'from-spearman':
        result = cop.from_spearman(values[0])
    elif args.tool == 'kendall':
        result = cop.kendall_tau(values[0])
    elif args.tool == 'cdf':
        if len(values) != 3:
            raise DomainError('cdf needs u1 u2 rho')
        result = float(cop.cdf(values[0], values[1], values[2]))
    else:
        if len(values) != 2:
            raise DomainError('sample needs rho n')
        result = cop.sample(values[0], int(values[1]), args.seed)
        for row in result:
            print('%.10f,%.10f' % tuple(row))
    if args.tool != 'sample':
        print('%.4f' % result)
    record = {'type': 'copula', 'version': __version__,
              'config': {'tool': args.tool, 'family': cop.name,
                         'values': values},
              'seed': args.seed if args.tool == 'sample' else None,
              'result': result}
    _emit([record], args.out)
    return EXIT_OK


def cmd_presets(args):
    for name in simulation.preset_names():
        print(name)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog='copula4probit',
        description='copula-based triangular binary choice models')
    parser.add_argument('--version', action='version',
                        version='%(prog)s ' + __version__)
    parser.add_argument('--log-level', default=None)
    sub = parser.add_subparsers(dest='command')
    sub.required = True

    p = sub.add_parser('estimate', help='estimate on a CSV file')
    p.add_argument('csv')
    p.add_argument('--y', required=True)
    p.add_argument('--d', required=True)
    p.add_argument('--x', nargs='*', default=[])
    p.add_argument('--z', nargs='*', default=[])
    p.add_argument('--model', action='append',
                   choices=['parametric', 'sieve'])
    p.add_argument('--copula', choices=sorted(copulas))
    p.add_argument('--g', choices=sorted(transforms))
    p.add_argument('--kn', help='sieve order: an integer or auto')
    p.add_argument('--boot', type=int, help='bootstrap iterations B')
    p.add_argument('--weights', choices=['exp', 'gamma'])
    p.add_argument('--starts', type=int)
    p.add_argument('--fix-alpha', nargs='*', default=[],
                   help='column=value pins in the treatment equation')
    p.add_argument('--fix-beta', nargs='*', default=[],
                   help='column=value pins in the outcome equation')
    p.add_argument('--at', nargs='*', type=float,
                   help='covariates for the ATE (default: column means)')
    p.add_argument('--seed', type=int)
    p.add_argument('--config')
    p.add_argument('--out')
    p.add_argument('--threads', type=int)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser('simulate', help='run a Monte Carlo preset')
    p.add_argument('preset', help='preset name or JSON scenario file')
    p.add_argument('--reps', type=int)
    p.add_argument('--n', type=int)
    p.add_argument('--boot', type=int)
    p.add_argument('--full', action='store_true')
    p.add_argument('--seed', type=int)
    p.add_argument('--out')
    p.add_argument('--threads', type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser('identlab', help='identification demos')
    p.add_argument('demo', choices=['binary-counterexample',
                                    'failure-distribution', 'positivity'])
    p.add_argument('--copula', choices=sorted(copulas))
    p.add_argument('--out')
    p.set_defaults(func=cmd_identlab)

    p = sub.add_parser('copula', help='copula utilities')
    p.add_argument('tool', choices=['spearman', 'from-spearman', 'kendall',
                                    'cdf', 'sample'])
    p.add_argument('family')
    p.add_argument('values', nargs='+')
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--out')
    p.set_defaults(func=cmd_copula)

    p = sub.add_parser('presets', help='list simulation presets')
    p.set_defaults(func=cmd_presets)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level)
    try:
        return args.func(args)
    except ConvergenceError as e:
        logger.error('numerical failure: %s', e)
        return EXIT_NUMERIC
    except (DataError, DomainError, NoRootError, OSError, ValueError) as e:
        logger.error('%s', e)
        return EXIT_USAGE


if __name__ == '__main__':
    sys.exit(main())
