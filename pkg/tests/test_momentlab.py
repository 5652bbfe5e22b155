import itertools
import json
import os

import jsonschema
import numpy as np
import pytest
from numpy.testing import assert_allclose

import charpoly_tools
from charpoly_tools.emit import emit
from charpoly_tools.errors import DegenerateConfigurationError, DomainError
from charpoly_tools.gaussfield import BiasSpec, GaussKernel, sample_gauss
from charpoly_tools.hyperbolic import DomainParams, hyp_dist, pseudo_dist, ray_point
from charpoly_tools.momentlab import (BiasClassParams, LowerBoundParams, MemVerify,
                                      PairConfiguration, _barrier_matrix, _lattice_points,
                                      barrier_indicator, barrier_pass_rate, barrier_sweep,
                                      branch_height, lower_bound_mc, matching_ratio,
                                      matching_sup, matching_sweep, mem_ratio, midpoint,
                                      omega_grid, pair_config_validate,
                                      random_pair_configuration, random_separated_bias,
                                      singleton_pair_suite, validate_paired_bias,
                                      validate_separated_bias)
from conftest import random_disk_points

SCHEMA_DIR = os.path.join(os.path.dirname(charpoly_tools.__file__), 'schemas')

Z1 = 0.8j
W1 = 0.8j * np.exp(0.3j)


@pytest.fixture
def single_class():
    return BiasClassParams(1, 0, 0.3, 0.2, 64)


def test_bias_class_params():
    params = BiasClassParams(2, 1, 0.3, 0.2, 64)
    assert params.domain.theta_max == pytest.approx(64 ** -0.2)
    assert 'k=2' in repr(params)
    with pytest.raises(DomainError):
        BiasClassParams(1, 0, 0.0, 0.2, 64)
    with pytest.raises(DomainError):
        BiasClassParams(-1, 0, 0.3, 0.2, 64)
    with pytest.raises(DomainError):
        BiasClassParams(1, 0, 0.3, 0.7, 64)


def test_validate_separated_bias(single_class):
    assert validate_separated_bias(BiasSpec([Z1], [W1]), single_class)
    # too close
    assert not validate_separated_bias(BiasSpec([Z1], [0.8j * np.exp(0.01j)]), single_class)
    # outside the wedge
    assert not validate_separated_bias(BiasSpec([0.3j], [W1]), single_class)
    assert not validate_separated_bias(BiasSpec([Z1], [W1]), BiasClassParams(2, 0, 0.3, 0.2, 64))
    assert validate_separated_bias(BiasSpec(), BiasClassParams(0, 0, 0.3, 0.2, 64))


def test_random_separated_bias(rng):
    params = BiasClassParams(2, 0, 0.3, 0.2, 64)
    for _ in range(5):
        bias = random_separated_bias(params, rng)
        assert validate_separated_bias(bias, params)
    crowded = BiasClassParams(40, 0, 3.0, 0.2, 64)
    with pytest.raises(DomainError):
        random_separated_bias(crowded, rng)


def test_validate_paired_bias(single_class):
    base = BiasSpec([Z1], [W1])
    z = 0.9j * np.exp(-0.2j)
    tight = (z, 0.9j * np.exp(-0.2001j))
    assert validate_paired_bias(base, [tight], single_class)
    assert validate_paired_bias(base, [])
    # z sits next to the base point Z1 while its partner is far away
    loose = (0.8j * np.exp(0.005j), 0.9j * np.exp(-0.3j))
    assert not validate_paired_bias(base, [loose])
    assert not validate_paired_bias(base, [(Z1, 0.9j)])
    assert not validate_paired_bias(base, [(0.3j, 0.30001j)], single_class)


def test_mem_ratio_empty_bias():
    assert mem_ratio(None, None, BiasSpec()) == 1.0


def test_singleton_pair_suite():
    N, delta = 256, 0.2
    domain = DomainParams(N, delta)
    suite = singleton_pair_suite(N, delta, n_translates=5)
    assert [name for name, _ in suite] == ['singleton'] + ['translate_%02d' % j for j in range(5)]
    gaps = []
    for _, bias in suite:
        assert np.all(domain.in_domain(bias.points))
        gaps.append(float(hyp_dist(bias.plus_points[0], bias.minus_points[0])))
    assert_allclose(gaps, gaps[0], rtol=1e-9)


def test_mem_verify_converges():
    mem = MemVerify(Ns=(64, 128), n_translates=2)
    assert list(mem.df.columns) == ['N', 'bias_id', 'ratio', 'abs_error']
    assert len(mem.df) == 6
    assert (mem.df['ratio'] > 0).all()
    single = mem.summary()['singleton']
    assert list(single.index) == [64, 128]
    assert single[128] < single[64] < 0.25
    assert (mem.summary()['max_over_translates'] >= single).all()
    assert 'max over translates' in mem.report()


@pytest.mark.slow
def test_mem_verify_acceptance_sizes():
    single = MemVerify(Ns=(64, 128, 256, 512), n_translates=2).summary()['singleton']
    assert list(single.index) == [64, 128, 256, 512]
    assert np.all(np.diff(single.values) < 0)
    assert single[512] < 0.25


def test_matching_ratio_extremes(rng):
    Z, W = random_disk_points(rng, 3, 0.9), random_disk_points(rng, 2, 0.9)
    cross = np.prod(pseudo_dist(Z[:, None], W[None, :]))
    assert_allclose(matching_ratio(Z, W, [0, 1, 2], [0, 1]), cross)
    assert_allclose(matching_ratio(Z, W, [], []), cross)
    assert_allclose(matching_ratio(Z, W, [0, 1, 2], []), 1.0)
    with pytest.raises(DomainError):
        matching_ratio([], W, [], [0])
    with pytest.raises(DegenerateConfigurationError):
        matching_ratio([0.1, 0.1, 0.5j], W, [0], [0])


def test_matching_sup_matches_enumeration(rng):
    for _ in range(10):
        Z, W = random_disk_points(rng, 3, 0.9), random_disk_points(rng, 3, 0.9)
        best = max(matching_ratio(Z, W, T, S)
                   for t in range(4) for T in itertools.combinations(range(3), t)
                   for s in range(4) for S in itertools.combinations(range(3), s))
        sup, T, S = matching_sup(Z, W)
        assert_allclose(sup, best, rtol=1e-10)
        assert_allclose(matching_ratio(Z, W, T, S), sup, rtol=1e-10)
        assert sup >= 1.0 - 1e-12


def test_matching_sup_singleton():
    sup, _, _ = matching_sup([0.3 + 0.1j], [-0.2 + 0.4j])
    assert_allclose(sup, 1.0)


def test_pair_configuration_validation():
    assert pair_config_validate(PairConfiguration([], 0, 0.3))
    assert not pair_config_validate(PairConfiguration([(0.1, 0.5), (0.12, -0.5)], 0, 0.3))
    assert not pair_config_validate(PairConfiguration([(0.0, 0.8), (0.1, -0.5)], 1, 0.3))
    assert pair_config_validate(PairConfiguration([(0.0, 0.01), (0.5, -0.5)], 1, 0.3))
    with pytest.raises(DomainError):
        PairConfiguration([(0.1, 0.2)], 2, 0.3)


def test_random_pair_configuration(rng):
    config = random_pair_configuration(2, 2, 0.3, rng)
    assert pair_config_validate(config)
    assert config.k == 2 and config.ell_paired == 2
    assert config.Z.size == config.W.size == 4


def test_matching_sweep():
    df = matching_sweep(2, 2, 0.3, 12, seed=0)
    assert list(df.columns) == ['config_index', 'k', 'ell', 'sup', 'running_sup']
    assert len(df) == 12
    assert ((df['k'] + df['ell']) > 0).all()
    assert (df['sup'] >= 1.0 - 1e-12).all()
    assert np.all(np.diff(df['running_sup']) >= 0)
    assert df.equals(matching_sweep(2, 2, 0.3, 12, seed=0))


def test_lower_bound_params():
    p = LowerBoundParams(10, 0.2, 3)
    assert p.n0 == 8
    assert list(p.b) == [0, 2, 4, 6]
    assert p.r == 2 and p.b_r == 4
    assert_allclose(p.window, 3.0 * np.sqrt(10.0))
    assert p.n_omega == 807
    for bad in ((0, 0.2, 3), (10, 0.5, 3), (10, 0.2, 1), (10, 0.2, 9)):
        with pytest.raises(DomainError):
            LowerBoundParams(*bad)


def test_omega_grid_stride():
    p = LowerBoundParams(10, 0.2, 3, stride=20)
    omegas = omega_grid(p)
    assert omegas.size == p.n_omega == 41
    assert_allclose(np.abs(omegas), 1.0)
    assert_allclose(np.diff(np.angle(omegas)), 20.0 * np.exp(-8.0), rtol=1e-9)
    assert_allclose(omegas[20], 1j, atol=1e-15)


def test_midpoint_and_branch_height():
    a, b = 1j, 1j * np.exp(0.5j)
    assert midpoint(a, b, 3) == 3
    assert midpoint(a, 1j * np.exp(1e-6j), 3) == 14
    with pytest.raises(DegenerateConfigurationError):
        midpoint(a, a, 3)
    assert branch_height(a, b, 8) == 1
    assert branch_height(a, 1j * np.exp(1e-6j), 8) == 8
    assert branch_height(a, -1j, 8) == 0


def test_lattice_points_share_top_level():
    # b_eta == n0 puts the last barrier level on the top points
    p = LowerBoundParams(10, 0.2, 4, stride=40)
    lattice = _lattice_points(p, p.omega)
    points = lattice['points']
    assert np.unique(points).size == points.size
    assert_allclose(lattice['offsets'], [2.0, 4.0])
    assert np.array_equal(lattice['barrier'][-1], lattice['top'])
    assert_allclose(points[lattice['base']], 1j * ray_point(4))


def test_lattice_points_ray_anchors():
    p = LowerBoundParams(10, 0.2, 3, stride=40)
    lattice = _lattice_points(p, p.omega)
    assert_allclose(lattice['points'][lattice['anchor']], p.omega * ray_point(p.b_r))
    # the anchor of omega = i is the center point itself
    center = int(np.argmin(np.abs(p.omega - 1j)))
    assert lattice['anchor'][center] == lattice['base']
    assert np.unique(lattice['anchor']).size == p.n_omega


def test_barrier_indicator_on_fixed_fields():
    p = LowerBoundParams(10, 0.2, 3)

    def depth(z):
        return 2.0 * np.arctanh(abs(z))
    assert barrier_indicator(depth, 1j, p)
    assert barrier_indicator(lambda z: 0.0, 1j, p)
    assert not barrier_indicator(lambda z: -10.0 * depth(z), 1j, p)


def test_barrier_indicator_matches_vectorized_event():
    p = LowerBoundParams(10, 0.2, 3, stride=80)
    lattice = _lattice_points(p, p.omega)
    sample = sample_gauss(lattice['points'], GaussKernel('G'), 30, 5)
    # a narrow window makes both outcomes occur
    p.window = 1.0
    matrix = _barrier_matrix(sample.values, lattice['barrier'], lattice['base'],
                             lattice['offsets'], p.window)
    for i in range(sample.n_samples):
        field = sample.row_field(i)
        for j, omega in enumerate(p.omega):
            assert barrier_indicator(field, omega, p) == matrix[i, j]


def test_barrier_pass_rate_and_sweep():
    p = LowerBoundParams(10, 0.2, 3)
    rate = barrier_pass_rate(p, 500, seed=2)
    assert 0.0 <= rate <= 1.0
    assert rate == barrier_pass_rate(p, 500, seed=2)
    assert rate == barrier_pass_rate(p, 500, seed=2, base='center')
    with pytest.raises(DomainError):
        barrier_pass_rate(p, 10, seed=2, base='nowhere')
    df = barrier_sweep(10, 0.2, [2, 3], 200, seed=2)
    assert list(df.columns) == ['eta', 'r', 'b_r', 'pass_rate']
    assert df['pass_rate'].between(0.0, 1.0).all()


@pytest.fixture(scope='module')
def lower_bound():
    return lower_bound_mc(LowerBoundParams(10, 0.2, 3, stride=20), 400, seed=1)


def test_lower_bound_cauchy_schwarz(lower_bound):
    assert 0.0 < lower_bound.cs_ratio <= 1.0
    assert lower_bound.p_z_positive >= lower_bound.cs_ratio - 1e-12
    assert lower_bound.factorization in ('cholesky', 'eigen')
    assert lower_bound.recentered_max.shape == (400,)
    assert lower_bound.fraction_above(-np.inf) == 1.0
    assert lower_bound.fraction_above() == lower_bound.fraction_above((1.0 - 2.0 * 0.2) * 10)


def test_lower_bound_tables(lower_bound):
    one = lower_bound.one_point
    assert list(one.columns) == ['omega_index', 'mc_mean', 'exact_no_indicator', 'ratio']
    assert len(one) == 41
    assert (one['exact_no_indicator'] > 1.0).all()
    df = lower_bound.df
    assert list(df.columns) == ['m', 'pairs', 'empirical_ratio', 'exact_ratio_mean',
                                'exact_ratio_max', 'tilted_ratio', 'bound_factor', 'regime']
    assert df['pairs'].sum() == 41 * 40
    assert set(df['regime']) <= {'small', 'large'}
    assert (df['exact_ratio_max'] >= df['exact_ratio_mean']).all()
    assert np.all(np.diff(df['m']) > 0)
    summary = lower_bound.summary()
    assert summary['n_omega'] == 41 and summary['n0'] == 8
    assert 'Cauchy-Schwarz' in lower_bound.report()


def test_lower_bound_small_m_factorization(lower_bound):
    small = lower_bound.df[lower_bound.df['regime'] == 'small']
    assert not small.empty
    assert (small['m'] <= 0.75 * 4).all()
    assert (np.abs(small['exact_ratio_mean'] - 1.0) <= 0.3).all()
    assert (np.abs(small['tilted_ratio'] - 1.0) <= 0.3).all()
    assert lower_bound.factorization_error() <= 0.3
    assert lower_bound.summary()['base'] == 'ray'


def test_center_anchor_breaks_small_m_factorization():
    center = lower_bound_mc(LowerBoundParams(10, 0.2, 3, stride=20), 100, seed=1, base='center')
    small = center.df[center.df['regime'] == 'small']
    assert (np.abs(small['exact_ratio_mean'] - 1.0) > 0.3).any()
    assert center.p_z_positive >= center.cs_ratio - 1e-12
    with pytest.raises(DomainError):
        lower_bound_mc(LowerBoundParams(10, 0.2, 3, stride=20), 10, seed=1, base='nowhere')


def test_lower_bound_record_schema(lower_bound, tmp_path):
    path = str(tmp_path / 'lowerbound.json')
    emit(lower_bound.to_record(), path, 'json')
    with open(path) as f:
        record = json.load(f)
    with open(os.path.join(SCHEMA_DIR, 'lowerbound.json')) as f:
        schema = json.load(f)
    jsonschema.validate(record, schema)
    assert record['n_samples'] == 400 and record['stride'] == 20
    assert len(record['per_m_bins']) == len(lower_bound.df)
    assert record['base'] == 'ray'
    assert record['factorization_error'] == lower_bound.factorization_error()


def test_lower_bound_is_reproducible(lower_bound):
    again = lower_bound_mc(LowerBoundParams(10, 0.2, 3, stride=20), 400, seed=1)
    assert again.p_z_positive == lower_bound.p_z_positive
    assert again.cs_ratio == lower_bound.cs_ratio
    assert again.df.equals(lower_bound.df)
