import numpy as np
import pytest
from numpy.testing import assert_allclose

from charpoly_tools.errors import DegenerateConfigurationError, DomainError, FactorizationError
from charpoly_tools.gaussfield import (BiasSpec, BrwCheck, CovFactor, GaussKernel, bias_variance,
                                       biased_mean, brw_check, cov_g, cov_g_cosh, cov_t,
                                       exp_moment, exp_moment_g, log_exp_moment_g, polar_grid,
                                       sample_gauss)
from charpoly_tools.hyperbolic import pseudo_dist, ray_point

from conftest import random_disk_points


def separated_bias(rng, n_plus, n_minus, sep=0.05, radius=0.9):
    pts = []
    while len(pts) < n_plus + n_minus:
        z = random_disk_points(rng, 1, radius)[0]
        if all(pseudo_dist(z, p) >= sep for p in pts):
            pts.append(z)
    return BiasSpec(pts[:n_plus], pts[n_plus:])


def test_cov_g_cosh_identity(rng):
    y, z = random_disk_points(rng, 50), random_disk_points(rng, 50)
    assert_allclose(cov_g_cosh(y, z), cov_g(y, z), rtol=1e-8, atol=1e-10)


def test_variance_on_ray():
    j = np.arange(1, 15)
    zeta = ray_point(j)
    assert_allclose(cov_g(zeta, zeta), np.log(np.cosh(j / 2.0)), rtol=1e-10)
    assert_allclose(cov_g(zeta[-1], zeta[-1]), j[-1] / 2.0 - np.log(2.0), atol=1e-5)


def test_cov_g_vanishes_at_origin(rng):
    assert_allclose(cov_g(0.0, random_disk_points(rng, 10)), 0.0, atol=1e-15)


def test_cov_t_symmetric_and_reflected(rng):
    z, w = random_disk_points(rng, 20), random_disk_points(rng, 20)
    assert_allclose(cov_t(z, w), cov_t(w, z), rtol=1e-12)
    assert_allclose(cov_t(z, w), cov_g(z, w) + cov_g(z, np.conj(w)), rtol=1e-12)


def test_kernel_kind():
    assert GaussKernel('g').kind == 'G'
    with pytest.raises(DomainError):
        GaussKernel('X')


def test_product_formula_matches_quadratic_form(rng):
    kernel = GaussKernel('G')
    for _ in range(100):
        n_plus, n_minus = rng.integers(0, 5, size=2)
        bias = separated_bias(rng, n_plus, n_minus)
        log_direct = 0.5 * bias_variance(bias.points, bias.weights, kernel)
        assert_allclose(log_exp_moment_g(bias), log_direct, rtol=1e-10, atol=1e-12)
        assert_allclose(exp_moment_g(bias), exp_moment(bias, kernel), rtol=1e-10)


def test_empty_bias():
    bias = BiasSpec()
    assert exp_moment_g(bias) == 1.0
    assert_allclose(biased_mean(bias, GaussKernel('G'), [0.1, 0.2j]), 0.0)


def test_overlapping_bias_rejected():
    with pytest.raises(DegenerateConfigurationError):
        BiasSpec([0.3j], [0.3j])
    with pytest.raises(DegenerateConfigurationError):
        exp_moment_g(BiasSpec([0.3j, 0.3j], [0.1]))


def test_bias_rotation_invariance(rng):
    bias = separated_bias(rng, 2, 2)
    rotated = bias.rotate(np.exp(0.7j))
    assert_allclose(exp_moment_g(rotated), exp_moment_g(bias), rtol=1e-12)
    assert_allclose(exp_moment_g(bias.conj()), exp_moment_g(bias), rtol=1e-12)


def test_biased_mean_is_covariance_with_bias(rng):
    kernel = GaussKernel('G')
    bias = separated_bias(rng, 1, 1)
    zeta = random_disk_points(rng, 5)
    expected = 2.0 * cov_g(zeta, bias.plus_points[0]) - 2.0 * cov_g(zeta, bias.minus_points[0])
    assert_allclose(biased_mean(bias, kernel, zeta), expected, rtol=1e-12)


def test_cov_factor_paths():
    c = np.array([[2.0, 0.5], [0.5, 1.0]])
    f = CovFactor(c, labels=['a', 'b'])
    assert f.method == 'cholesky'
    assert_allclose(f.factor @ f.factor.T, c)
    assert_allclose(f.correlation().loc['a', 'b'], 0.5 / np.sqrt(2.0))
    g = CovFactor(np.ones((3, 3)))
    assert g.method == 'eigen'
    assert_allclose(g.factor @ g.factor.T, np.ones((3, 3)), atol=1e-12)
    with pytest.raises(FactorizationError):
        CovFactor(np.diag([1.0, -1.0]))


def test_sample_gauss_reproducible(rng):
    pts = random_disk_points(rng, 6, 0.8)
    a = sample_gauss(pts, GaussKernel('G'), 3000, seed=5)
    b = sample_gauss(pts, GaussKernel('G'), 3000, seed=5)
    c = sample_gauss(pts, GaussKernel('G'), 3000, seed=6)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)
    assert a.values.shape == (3000, 6)
    assert_allclose(a.column(pts[2]), a.values[:, 2])
    assert a.row_field(7)(pts[4]) == a.values[7, 4]
    frame = a.to_frame()
    assert len(frame) == 3000 * 6


def test_sample_gauss_rejects_duplicates():
    with pytest.raises(DegenerateConfigurationError):
        sample_gauss([0.1, 0.1, 0.2j], GaussKernel('G'), 10, seed=0)


def test_sample_gauss_missing_point():
    s = sample_gauss([0.1, 0.2j], GaussKernel('G'), 4, seed=0)
    with pytest.raises(DomainError):
        s.column(0.3)


@pytest.mark.parametrize('kind', ['G', 'T'])
def test_sampled_covariance_within_stderr(rng, kind):
    kernel = GaussKernel(kind)
    pts = random_disk_points(rng, 20, 0.85)
    sample = sample_gauss(pts, kernel, 200000, seed=11)
    z = (sample.empirical_covariance() - kernel.matrix(pts)) / sample.covariance_stderr(kernel)
    assert np.max(np.abs(z)) < 5.0


def test_biased_sampling_shifts_mean(rng):
    kernel = GaussKernel('G')
    pts = np.array([0.5j, 0.6 + 0.1j, -0.3 - 0.4j])
    bias = BiasSpec([pts[0]], [pts[1]])
    sample = sample_gauss(pts, kernel, 100000, seed=3)
    # E[F e^{B}] / E[e^{B}] under the unbiased sample
    weights = np.exp(bias.evaluate(sample.values[:, :2]))
    tilted = (sample.values * weights[:, None]).sum(axis=0) / weights.sum()
    assert_allclose(tilted, biased_mean(bias, kernel, pts), atol=0.05)


def test_brw_check_grid_stability():
    check = BrwCheck(GaussKernel('G'), max_depth=4, n_thetas=(8, 16))
    assert np.all(np.isfinite(check.df[['c_b', 'c_c', 'k_lo', 'k_hi']].values))
    c_b = check.df['c_b']
    assert c_b.max() / c_b.min() <= 2.0
    s = check.summary()
    assert s['kind'] == 'G'


def test_brw_record_fields():
    rec = brw_check(polar_grid([1.0, 2.0], np.linspace(-np.pi, np.pi, 8, endpoint=False)),
                    GaussKernel('T'))
    assert rec.c_b > 0
    lo, hi = rec.k_offset_range
    assert lo <= hi
