import numpy as np
import pytest
from numpy.testing import assert_allclose

from charpoly_tools.ensemble import (EquilibriumModel, Spectrum, gue_model, quartic_model,
                                     sample_spectrum)
from charpoly_tools.errors import DomainError
from charpoly_tools.extremes import (FACTOR, MaxExperiment, centering, cheb_grid,
                                     cheb_lift_residual, chebyshev_roots, circle_max,
                                     empirical_centering, equilibrium_shift, factor14_check,
                                     factor14_sweep, field_q, log_abs_sum, max_experiment,
                                     regularization_constant, regularized_max,
                                     second_order_center)


@pytest.fixture(scope='module')
def gue():
    return gue_model()


def test_cheb_grid():
    x = cheb_grid(3)
    assert x.size == 7
    assert x[0] == 1.0 and x[-1] == -1.0
    assert np.all(np.diff(x) < 0)
    assert_allclose(x[3], 0.0, atol=1e-15)
    with pytest.raises(DomainError):
        cheb_grid(0)


def test_log_abs_sum_blocks(rng):
    lam = np.sort(rng.uniform(-1, 1, 40))
    q = rng.uniform(-2, 2, 1500) + 1j * rng.uniform(0.01, 1, 1500)
    direct = np.log(np.abs(q[:, None] - lam[None, :])).sum(axis=1)
    assert_allclose(log_abs_sum(lam, q), direct, rtol=1e-12)
    assert log_abs_sum(lam, q.reshape(30, 50)).shape == (30, 50)
    assert np.isneginf(log_abs_sum(lam, lam[3]))


def test_gue_centering(gue):
    N = 32
    x = np.array([-0.9, -0.2, 0.0, 0.5])
    assert_allclose(centering(gue, N, x), N * (x ** 2 - 0.5 - np.log(2.0)), rtol=1e-12)
    q = 0.3 + 0.2j
    assert_allclose(centering(gue, N, q), N * complex(gue.g(q)).real, rtol=1e-12)


def test_field_q_far_away(gue):
    spectrum = sample_spectrum(gue, 64, 5)
    value = field_q(spectrum, gue, 10.0 + 0j)
    assert isinstance(value, float)
    assert abs(value) < 0.5
    grid = cheb_grid(64)
    assert_allclose(field_q(spectrum, gue, grid),
                    field_q(spectrum, gue, grid, centering(gue, 64, grid)))


def test_chebyshev_lift_is_a_polynomial(rng):
    for roots in (chebyshev_roots(8), rng.uniform(-1.2, 1.2, 17), np.array([0.3])):
        assert cheb_lift_residual(roots) < 1e-10
        assert cheb_lift_residual(roots, n_circle=128) < 1e-10


def test_factor14_chebyshev_extremal():
    for degree in (1, 3, 8, 64):
        rec = factor14_check(roots=chebyshev_roots(degree))
        assert_allclose(rec.max_ratio, 1.0, atol=1e-9)
        assert rec.ok


def test_factor14_coefficient_input():
    rec = factor14_check(poly=[-0.5, 0.0, 1.0])
    assert_allclose(rec.max_ratio, 1.0, atol=1e-9)
    assert_allclose(rec.grid_max, np.log(0.5))
    rec = factor14_check(poly=np.polynomial.Polynomial([0.2, -1.0, 0.0, 3.0]), N=3)
    assert 1.0 <= rec.max_ratio <= FACTOR
    assert rec.lift_residual == 0.0


def test_factor14_random_roots(rng):
    for _ in range(50):
        roots = rng.uniform(-1.2, 1.2, rng.integers(1, 40))
        rec = factor14_check(roots=roots)
        assert 1.0 - 1e-12 <= rec.max_ratio <= FACTOR
        assert rec.dense_max >= rec.grid_max


def test_factor14_sweep():
    df = factor14_sweep(n_polys=20, max_degree=32, seed=4)
    assert list(df.columns) == ['case', 'degree', 'max_ratio', 'argmax', 'lift_residual', 'ok']
    assert len(df) == 26
    assert df['ok'].all()
    assert (df['lift_residual'] < 1e-8).all()
    assert df['case'].iloc[-1] == 'chebyshev_32'
    again = factor14_sweep(n_polys=20, max_degree=32, seed=4)
    assert df.equals(again)


def test_equilibrium_shift_bounds(gue):
    N = 128
    x = cheb_grid(N)
    for y in (1.0, 3.0):
        shift = equilibrium_shift(gue, x, y, N)
        assert np.all(shift >= -1e-10)
        assert np.all(shift <= np.pi * gue.rho_max * y + 1e-10)


def test_regularization_constant(gue):
    # pi (2/pi) / 3 + log 14 + (pi/2) * 2
    assert_allclose(regularization_constant(gue), 2.0 / 3.0 + np.log(14.0) + np.pi, rtol=1e-6)
    assert regularization_constant(quartic_model(1.0)) > regularization_constant(gue)


def test_regularized_max_ordering(gue):
    for seed in range(5):
        spectrum = sample_spectrum(gue, 64, seed)
        rec = regularized_max(spectrum, gue, 2.0)
        assert rec.ordering_ok
        assert rec.N == 64 and rec.y == 2.0
        assert np.isfinite(rec.m_star) and np.isfinite(rec.m_star_reg)
    with pytest.raises(DomainError):
        regularized_max(spectrum, gue, 0.5)


def test_circle_max_is_small(gue):
    spectrum = Spectrum(np.linspace(-0.9, 0.9, 32), 'gue', 0, 'tridiagonal')
    assert abs(circle_max(spectrum, gue)) < 1.0


def test_max_experiment_is_schedule_independent(gue):
    serial = max_experiment(gue, 32, 4, y=2.0, seed=11)
    pooled = max_experiment(gue, 32, 4, y=2.0, seed=11, threads=2)
    assert serial == pooled
    assert [r.seed for r in serial] == [0, 1, 2, 3]
    with pytest.raises(DomainError):
        max_experiment(gue, 32, 0)


def test_max_experiment_uses_the_given_model():
    model = quartic_model(0.12345678)
    records = max_experiment(model, 8, 2, seed=3, sweeps=20)
    for rec in records:
        spectrum = sample_spectrum(model, 8, 3, sub=(rec.seed,), sweeps=20)
        assert rec.m_star == float(np.max(field_q(spectrum, model, cheb_grid(8))))


def test_max_experiment_accepts_user_models(gue):
    # lambdas do not pickle, so the pool falls back to in-process execution
    mine = EquilibriumModel('mine', V=lambda x: 2.0 * np.asarray(x) ** 2, rho=gue.rho,
                            g_exact=gue._g_exact, stieltjes_exact=gue._stieltjes_exact,
                            log_potential_exact=gue._log_potential_exact)
    serial = max_experiment(mine, 8, 3, seed=5, sweeps=20)
    pooled = max_experiment(mine, 8, 3, seed=5, sweeps=20, threads=2)
    assert [r.m_star for r in serial] == [r.m_star for r in pooled]
    assert [r.seed for r in pooled] == [0, 1, 2]


def test_max_experiment_frame(gue):
    exp = MaxExperiment(gue, [16, 32], 6, seed=2)
    assert list(exp.df.columns) == ['N', 'seed_index', 'm_star', 'm_star_over_logN',
                                    'm_star_centered_2nd_order']
    assert len(exp.df) == 12
    summary = exp.summary()
    assert list(summary.index) == [16, 32]
    assert (summary['samples'] == 6).all()
    record = exp.summary_json()
    assert record['model'] == 'gue' and len(record['by_N']) == 2
    assert set(exp.upper_tail_fraction().index) == {16, 32}
    assert len(exp.head(3)) == 3
    assert 'median/lN' in exp.report()


def test_max_experiment_with_shift(gue):
    exp = MaxExperiment(gue, 32, 4, y=1.5, seed=0)
    assert {'m_star_reg', 'ordering_ok'} <= set(exp.df.columns)
    assert exp.df['ordering_ok'].all()


def test_second_order_center():
    assert_allclose(second_order_center(np.e ** 2), 2.0 - 0.75 * np.log(2.0))


def test_empirical_centering(gue):
    df = empirical_centering(gue, 16, 20, seed=1)
    assert list(df.columns) == ['x', 'offset', 'stderr']
    assert len(df) == 33
    assert np.all(np.isfinite(df['offset'])) and np.all(df['stderr'] > 0)


@pytest.mark.slow
def test_gue_maximum_law_of_large_numbers(gue):
    exp = MaxExperiment(gue, [256, 1024, 4096], 200, seed=0, threads=4)
    summary = exp.summary()
    medians = summary['median_over_logN'].values
    assert np.all((medians >= 0.55) & (medians <= 1.1))
    assert np.all(np.diff(medians) >= 0)
    assert -3.0 <= summary.loc[4096, 'median_centered'] <= 4.0


@pytest.mark.slow
def test_gue_maximum_upper_tail(gue):
    exp = MaxExperiment(gue, 1024, 200, seed=1, threads=4)
    assert exp.upper_tail_fraction(3.0)[1024] < 0.05
