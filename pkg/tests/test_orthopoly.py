import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import integrate
from scipy.special import factorial

from charpoly_tools.ensemble import gue_model, quartic_model
from charpoly_tools.errors import DomainError
from charpoly_tools.orthopoly import (LogComplex, OPTable, eval_h, eval_h_range, eval_pi,
                                      eval_pi_range, gamma0, global_parametrix_boundary,
                                      global_parametrix_onecut, h0_faddeeva, h0_quadrature,
                                      m_bound_sweep, m_matrix, r_weight, recurrence_table,
                                      y_jump_residual, y_matrix)

N = 16
XS = np.linspace(-3.0, 3.0, 20001)


@pytest.fixture(scope='module')
def gue():
    return gue_model()


@pytest.fixture(scope='module')
def table(gue):
    return recurrence_table(gue, N, N + 4)


def hermite_monic(n, x):
    sigma = 0.5 / np.sqrt(N)
    coef = np.zeros(n + 1)
    coef[n] = 1.0
    return sigma ** n * np.polynomial.hermite_e.hermeval(x / sigma, coef)


def test_logcomplex_arithmetic():
    a = LogComplex.from_complex(3.0 - 4.0j)
    b = LogComplex.from_complex(-0.5 + 2.0j)
    assert_allclose(a.value(), 3.0 - 4.0j)
    assert_allclose((a * b).value(), (3.0 - 4.0j) * (-0.5 + 2.0j))
    assert_allclose((2.0j * a).value(), 2.0j * (3.0 - 4.0j))
    assert_allclose(a.conj().value(), 3.0 + 4.0j)
    assert_allclose(a.times_exp(1.0 + 0.5j).value(), (3.0 - 4.0j) * np.exp(1.0 + 0.5j))
    assert_allclose(a.scaled(np.log(5.0)), (3.0 - 4.0j) / 5.0)


def test_logcomplex_holds_huge_values():
    big = LogComplex(np.array([2000.0, 1.0]), np.array([1j, -1.0]))
    assert np.isinf(big.value()[0])
    assert_allclose(big.scaled(2000.0)[0], 1j)
    assert_allclose(big[1].value(), -np.e)


def test_gue_table_closed_form(table):
    beta, a2 = table.coefficients(10)
    assert_allclose(beta, 0.0)
    assert_allclose(a2[1:], np.arange(1, 11) / (4.0 * N))
    assert_allclose(table.gamma0, (2.0 * N / np.pi) ** 0.25)
    # extends past n_max by the closed form
    beta, a2 = table.coefficients(table.n_max + 50)
    assert_allclose(a2[-1], (table.n_max + 50) / (4.0 * N))
    table.check_degree(0, table.n_max + 50)
    with pytest.raises(DomainError):
        table.check_degree(-1, 3)
    with pytest.raises(DomainError):
        table.check_degree(4, 3)


def test_stieltjes_procedure_recovers_gaussian_weight():
    # quartic(0) has V = 2x^2 but goes through the numerical route
    model = quartic_model(0.0)
    assert not model.is_gue
    table = recurrence_table(model, N, 10)
    assert table.closed_form is None
    assert_allclose(table.beta[:11], 0.0, atol=1e-10)
    assert_allclose(table.a2[1:11], np.arange(1, 11) / (4.0 * N), rtol=1e-8)
    assert_allclose(gamma0(model, N), (2.0 * N / np.pi) ** 0.25, rtol=1e-10)
    with pytest.raises(DomainError):
        table.check_degree(0, 11)


def test_pi_matches_scaled_hermite(table):
    x = np.array([-0.7, 0.05, 0.3, 1.4])
    for n in (0, 1, 3, 8):
        assert_allclose(eval_pi(table, n, x).value(), hermite_monic(n, x), rtol=1e-9,
                        atol=1e-15)
    pis = eval_pi_range(table, 0.3 + 0.2j, 2, 5)
    assert sorted(pis) == [2, 3, 4, 5]
    assert_allclose(pis[4].value(), hermite_monic(4, 0.3 + 0.2j), rtol=1e-12)


def test_pi_orthogonality_and_norms(gue, table):
    w = np.exp(-N * gue.V(XS))
    pis = eval_pi_range(table, XS, 0, 6)
    vals = np.array([pis[n].value().real for n in range(7)])
    gram = integrate.trapezoid(vals[:, None, :] * vals[None, :, :] * w, XS, axis=-1)
    norms = np.exp(-np.array([table.log_gamma_sq(n) for n in range(7)]))
    assert_allclose(np.diag(gram), norms, rtol=1e-10)
    off = gram - np.diag(np.diag(gram))
    assert np.max(np.abs(off) / np.sqrt(np.outer(norms, norms))) < 1e-10


def test_log_gamma_sq_gaussian(table):
    sigma = 0.5 / np.sqrt(N)
    for n in (0, 1, 5, 12):
        expected = -np.log(factorial(n) * sigma ** (2 * n) * np.sqrt(2.0 * np.pi) * sigma)
        assert_allclose(table.log_gamma_sq(n), expected, rtol=1e-12)


def test_h0_routes_agree(table):
    qs = np.array([0.3 + 0.4j, -1.2 + 0.05j, 0.3 - 0.4j, 2.0 - 1.0j])
    assert_allclose(h0_faddeeva(table, qs), h0_quadrature(table, qs), rtol=1e-9)


def test_h_against_direct_integral(gue, table):
    q = 0.3 + 0.4j
    w = np.exp(-N * gue.V(XS))
    pi3 = hermite_monic(3, XS)
    direct = integrate.trapezoid(pi3 * w / (XS - q), XS) / (2j * np.pi)
    assert_allclose(eval_h(table, 3, q, method='backward').value(), direct, rtol=1e-8)
    assert_allclose(eval_h(table, 3, q, method='backward', h0_method='quadrature').value(),
                    direct, rtol=1e-8)


def test_h_forward_matches_backward(table):
    q = 0.3 + 1.0j
    fwd = eval_h_range(table, q, 0, 2, method='forward')
    bwd = eval_h_range(table, q, 0, 2, method='backward')
    for n in range(3):
        assert_allclose(fwd[n].value(), bwd[n].value(), rtol=1e-6)
    cf = eval_h_range(table, q, 0, 2, method='backward', h0_method='cf')
    assert_allclose(cf[0].value(), bwd[0].value(), rtol=1e-10)


def test_h_conjugation_symmetry(table):
    q = 0.3 + 0.4j
    for n in (0, 2, 5):
        upper = eval_h(table, n, q, method='backward').value()
        lower = eval_h(table, n, np.conj(q), method='backward').value()
        assert_allclose(lower, -np.conj(upper), rtol=1e-10)


def test_h_rejects_real_axis(table):
    with pytest.raises(DomainError):
        eval_h(table, 2, 0.4)
    with pytest.raises(DomainError):
        eval_h_range(table, 0.3 + 0.1j, 0, 2, method='sideways')


def test_faddeeva_needs_gaussian_weight():
    table = recurrence_table(quartic_model(1.0), N, 4)
    with pytest.raises(DomainError):
        h0_faddeeva(table, 0.2 + 0.3j)


def test_y_matrix_unit_determinant(table):
    for q in (0.5 + 0.3j, -1.5 + 0.2j, 0.1 - 0.6j, 2.0 + 1.0j):
        Y = y_matrix(table, q)
        assert Y.kind == 'Y'
        assert_allclose(Y.det(), 1.0, atol=1e-8)


def test_unit_determinants_on_random_instances(gue):
    rng = np.random.default_rng(11)
    tables = {}
    for _ in range(100):
        n = int(rng.integers(2, 65))
        q = complex(rng.uniform(-2.0, 2.0), rng.choice([-1.0, 1.0]) * rng.uniform(0.1, 1.0))
        if n not in tables:
            tables[n] = recurrence_table(gue, n, n)
        assert_allclose(y_matrix(tables[n], q).det(), 1.0, atol=1e-7)
        assert_allclose(m_matrix(tables[n], gue, q).det(), 1.0, atol=1e-7)
        assert_allclose(global_parametrix_onecut(q).det(), 1.0, atol=1e-12)


def test_m_matrix_error_decreases_with_N(gue):
    qs = (0.3 + 0.5j, -0.6 + 0.4j, 1.5 + 0.5j, 0.2 - 0.7j)
    errors = []
    for n in (64, 128, 256, 512):
        table = recurrence_table(gue, n, n)
        errors.append(max(np.linalg.norm(m_matrix(table, gue, q).unscaled()
                                         - global_parametrix_onecut(q).entries, 2)
                          for q in qs))
    assert np.all(np.diff(errors) < 0)
    assert errors[-1] < 0.05


def test_y_jump_on_the_real_axis(table):
    for x in (-0.4, 0.2, 1.3):
        assert y_jump_residual(table, x) < 1e-3


def test_m_matrix_approaches_global_parametrix(gue):
    big = recurrence_table(gue, 256, 257)
    q = 0.3 + 0.5j
    M = m_matrix(big, gue, q)
    assert_allclose(M.det(), 1.0, atol=1e-8)
    assert_allclose(M.unscaled(), global_parametrix_onecut(q).entries, atol=0.05)
    assert m_bound_sweep(big, gue, [q, -0.6 + 0.2j, 1.5 + 0.5j]) < 10.0


def test_global_parametrix_properties():
    for q in (0.3 + 0.5j, -2.0 - 0.1j, 5.0 + 5.0j):
        P = global_parametrix_onecut(q)
        assert_allclose(P.det(), 1.0, atol=1e-12)
    assert_allclose(global_parametrix_onecut(1e6 + 1e6j).entries, np.eye(2), atol=1e-5)
    with pytest.raises(DomainError):
        global_parametrix_onecut(0.2)


def test_global_parametrix_boundary_jump():
    jump = np.array([[0.0, 1.0], [-1.0, 0.0]])
    for x in (-0.8, 0.0, 0.3):
        plus = global_parametrix_boundary(x, 1).entries
        minus = global_parametrix_boundary(x, -1).entries
        assert_allclose(plus, minus @ jump, atol=1e-12)
        assert_allclose(global_parametrix_onecut(complex(x, 1e-10)).entries, plus, atol=1e-6)
        assert_allclose(global_parametrix_onecut(complex(x, -1e-10)).entries, minus, atol=1e-6)
    with pytest.raises(DomainError):
        global_parametrix_boundary(1.0)


def test_r_weight(gue):
    q = 0.4 + 0.3j
    assert_allclose(r_weight(gue, q), r_weight(gue, np.conj(q)))
    assert_allclose(r_weight(gue, q), r_weight(gue, -q))
    assert_allclose(r_weight(gue, 3.0), (2.0 * 4.0) ** -0.25)


def test_table_json_round_trip(table, tmp_path):
    path = str(tmp_path / 'gue.json')
    table.to_json(path)
    back = OPTable.from_json(path)
    assert back.model == 'gue' and back.N == N and back.n_max == table.n_max
    assert_allclose(back.a2, table.a2)
    assert_allclose(back.gamma0, table.gamma0)
    assert back.closed_form is not None
