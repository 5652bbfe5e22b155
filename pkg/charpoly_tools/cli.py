"""Command-line entry point: ``charpoly <command> [--key value ...]``.

Exit codes: 0 success, 1 failed check or numerical error, 2 configuration,
parameter range or I/O error.
"""
import argparse
import logging
import math
import sys

import numpy as np
import pandas as pd

from . import __version__
from .charpoly import FsVerify, laplace_bound_sweep
from .emit import emit
from .ensemble import get_model, gue_model, sample_spectrum
from .errors import CharpolyError, CheckFailed, ConfigError, DomainError
from .extremes import MaxExperiment, factor14_sweep
from .gaussfield import BrwCheck, GaussKernel
from .hyperbolic import BranchSweep
from .load_config import COMMANDS, KEYS, RunConfig, load_config
from .load_spectrum import save_spectrum
from .momentlab import LowerBoundParams, MemVerify, barrier_sweep, lower_bound_mc, matching_sweep
from .orthopoly import recurrence_table

logger = logging.getLogger(__name__)

LAPLACE_BOUND = 100.0
MEM_TOLERANCE = 0.25


def _model(config):
    if config.model == 'quartic':
        return get_model('quartic', config.t4)
    return get_model(config.model)


def _sampler_knobs(config):
    return config.sweeps or None, config.step or None


def _format(config, default):
    ''' --format, else the --out extension, else the command default '''
    if config.format:
        return config.format
    out = (config.out or '').lower()
    if out.endswith('.json'):
        return 'json'
    if out.endswith('.csv'):
        return 'csv'
    return default


def _write(config, records, default_fmt, columns=None):
    if config.out is None:
        return
    emit(records, config.out, _format(config, default_fmt), columns)
    logger.info('wrote %s', config.out)


def run_gen_spectrum(config):
    model = _model(config)
    sweeps, step = _sampler_knobs(config)
    spectrum = sample_spectrum(model, config.N[0], config.seed, sweeps=sweeps, step=step)
    if config.out is not None:
        save_spectrum(spectrum, config.out)
    m2 = spectrum.moments(2)[1]
    print('%r  second moment %.6f (equilibrium %.6f)' % (spectrum, m2, model.moment(2)))
    return [('finite', bool(np.all(np.isfinite(spectrum.eigenvalues)))),
            ('second_moment', abs(m2 - model.moment(2)) < 0.05 + 2.0 / spectrum.N)]


def run_max_experiment(config):
    model = _model(config)
    sweeps, step = _sampler_knobs(config)
    y = None if math.isnan(config.y) else config.y
    exp = MaxExperiment(model, list(config.N), config.samples, y, config.seed,
                        config.threads, sweeps, step)
    if _format(config, 'csv') == 'json':
        _write(config, exp.summary_json(), 'json')
    else:
        _write(config, exp.df, 'csv')
    print(exp.report())
    medians = exp.summary()['median_over_logN'].values
    checks = [('median_range', bool(np.all((medians >= 0.55) & (medians <= 1.1)))),
              ('median_trend', bool(np.all(np.diff(medians) >= 0))),
              ('upper_tail', bool((exp.upper_tail_fraction(3.0) < 0.05).all()))]
    if y is not None:
        checks.append(('ordering', bool(exp.df['ordering_ok'].all())))
    return checks


def run_fs_verify(config):
    fs = FsVerify(n_samples=config.samples, seed=config.seed, threads=config.threads)
    _write(config, fs.df, 'csv')
    print(fs.report())
    return [('z_score', fs.passed(3.0))]


def run_mem_verify(config):
    mem = MemVerify(config.N, config.delta)
    _write(config, mem.df, 'csv')
    print(mem.report())
    single = mem.summary()['singleton'].values
    return [('decreasing', bool(np.all(np.diff(single) < 0))),
            ('tolerance', bool(single[-1] < MEM_TOLERANCE))]


def run_branch_verify(config):
    sweep = BranchSweep()
    _write(config, sweep.df, 'csv')
    print(sweep.summary().to_string())
    return [('bounded', math.isfinite(sweep.error_bound())),
            ('refined', sweep.refined_constant() <= 10.0)]


def run_matching_verify(config):
    df = matching_sweep(config.k, config.ell, config.epsilon, config.samples, config.seed)
    _write(config, df, 'csv')
    half = df['sup'].iloc[:max(1, len(df) // 2)].max()
    full = df['sup'].max()
    print('configurations %d  sup %.6g  first-half sup %.6g' % (len(df), full, half))
    return [('finite', bool(np.all(np.isfinite(df['sup'])))), ('stable', 2.0 * half >= full)]


def run_lowerbound_sim(config):
    params = LowerBoundParams(config.n, config.delta, config.eta[0], config.stride)
    result = lower_bound_mc(params, config.samples, config.seed, base=config.base)
    record = result.to_record()
    if len(config.eta) > 1:
        sweep = barrier_sweep(config.n, config.delta, config.eta, config.samples, config.seed)
        record['barrier_sweep'] = sweep.to_dict(orient='records')
    if _format(config, 'json') == 'csv':
        _write(config, result.df, 'csv')
    else:
        _write(config, record, 'json')
    print(result.report())
    return [('cauchy_schwarz', result.p_z_positive >= result.cs_ratio - 1e-12),
            ('recentered_max', result.fraction_above() >= 0.5),
            ('small_m_factorization', result.factorization_error() <= 0.3)]


def run_upperbound_verify(config):
    f14 = factor14_sweep(config.samples, 256, config.seed)
    model = gue_model()
    N = config.N[0]
    laplace = laplace_bound_sweep(recurrence_table(model, N, N + 1), model)
    record = {'N': N, 'factor14_cases': len(f14),
              'factor14_max_ratio': float(f14['max_ratio'].max()),
              'factor14_violations': int((~f14['ok']).sum()),
              'laplace_plus_constant': float(laplace['plus_normalized'].max()),
              'laplace_minus_constant': float(laplace['minus_normalized'].max()),
              'min_plus_minus_product': float((laplace['plus'] * laplace['minus']).min())}
    _write(config, record, 'json')
    for key in sorted(record):
        print('%-24s %s' % (key, record[key]))
    return [('factor14', record['factor14_violations'] == 0),
            ('laplace', max(record['laplace_plus_constant'],
                            record['laplace_minus_constant']) <= LAPLACE_BOUND),
            ('cauchy_schwarz', record['min_plus_minus_product'] >= 1.0 - 1e-9)]


def run_brw_verify(config):
    frames = []
    for kind in ('G', 'T'):
        check = BrwCheck(GaussKernel(kind))
        frames.append(check.df.assign(kind=kind))
        print(check.summary().to_string())
    df = pd.concat(frames, ignore_index=True)
    _write(config, df, 'csv')
    c_b = df.groupby('kind')['c_b']
    return [('finite', bool(np.all(np.isfinite(df[['c_b', 'c_c', 'k_lo', 'k_hi']].values)))),
            ('stable', bool(((c_b.max() / c_b.min()) <= 2.0).all()))]


RUNNERS = {'gen-spectrum': run_gen_spectrum, 'max-experiment': run_max_experiment,
           'fs-verify': run_fs_verify, 'mem-verify': run_mem_verify,
           'branch-verify': run_branch_verify, 'matching-verify': run_matching_verify,
           'lowerbound-sim': run_lowerbound_sim, 'upperbound-verify': run_upperbound_verify,
           'brw-verify': run_brw_verify}


def run(config):
    ''' Execute one configured command

    Returns
    -------
    int
        0, or raises CheckFailed when a --check assertion fails
    '''
    logger.info('running %s', config.command)
    checks = RUNNERS[config.command](config)
    failed = [name for name, ok in checks if not ok]
    for name, ok in checks:
        logger.info('check %s: %s', name, 'ok' if ok else 'FAILED')
    if config.check and failed:
        raise CheckFailed('%s: failed checks %s' % (config.command, ', '.join(failed)))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog='charpoly', allow_abbrev=False,
                                     description='Random-matrix characteristic polynomial lab')
    parser.add_argument('command', nargs='?', choices=COMMANDS,
                        help='experiment or verification to run')
    parser.add_argument('--config', help='flat key-value configuration file')
    parser.add_argument('--log-level', default='WARNING',
                        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'])
    parser.add_argument('--version', action='version', version='%(prog)s ' + __version__)
    parser.add_argument('--samples', help='sample count (configurations, polynomials)')
    parser.add_argument('--N', help='matrix size, or comma-separated sizes')
    parser.add_argument('--out', help='output file (.csv or .json)')
    parser.add_argument('--check', action='store_const', const='true',
                        help='run acceptance assertions; exit 1 on failure')
    for key in sorted(KEYS):
        if key in ('command', 'samples', 'N', 'out', 'check'):
            continue
        parser.add_argument('--' + key)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), stream=sys.stderr,
                        format='%(levelname)s %(name)s: %(message)s')
    try:
        raw = load_config(args.config) if args.config else {}
        flags = {k: v for k, v in vars(args).items()
                 if k in KEYS and v is not None}
        raw.update(flags)
        config = RunConfig.from_dict(raw)
        return run(config)
    except (ConfigError, DomainError, OSError) as e:
        logger.error('%s', e)
        return 2
    except CharpolyError as e:
        logger.error('%s', e)
        return 1


if __name__ == '__main__':
    sys.exit(main())
