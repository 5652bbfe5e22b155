"""Monic orthogonal polynomials for e^{-N V}, their Cauchy transforms and
the Riemann-Hilbert matrices Y_N, M_N and the one-cut global parametrix.

Values of pi_n and h_n overflow double range already for moderate N, so they
are carried as LogComplex (log-magnitude plus unit phase).
"""
import json
import logging

import numpy as np
from scipy import integrate
from scipy.special import wofz

from .emit import emit
from .errors import ConvergenceError, DomainError, InstabilityError, OrthogonalityError

logger = logging.getLogger(__name__)

RESCALE = 1e100
FORWARD_LOG_AMPLIFICATION = np.log(1e4)
CF_TOL = 1e-14
CF_MAX_DEPTH = 4000000
DET_TOL = 1e-6
ORTHO_TOL = 1e-8


class LogComplex:
    def __init__(self, log_mag, phase):
        ''' Complex number(s) stored as exp(log_mag) * phase with |phase| = 1 '''
        self.log_mag = np.asarray(log_mag, dtype=float)
        self.phase = np.asarray(phase, dtype=complex)

    @classmethod
    def from_complex(cls, z):
        z = np.asarray(z, dtype=complex)
        mag = np.abs(z)
        with np.errstate(divide='ignore', invalid='ignore'):
            phase = np.where(mag > 0, z / np.where(mag > 0, mag, 1.0), 1.0 + 0j)
            return cls(np.log(mag), phase)

    def value(self):
        ''' Plain complex value (may overflow to inf) '''
        with np.errstate(over='ignore'):
            return np.exp(self.log_mag) * self.phase

    def scaled(self, log_factor):
        ''' Value times exp(-log_factor), as a plain complex '''
        with np.errstate(over='ignore', under='ignore'):
            return np.exp(self.log_mag - log_factor) * self.phase

    def times_exp(self, c):
        ''' self * exp(c) for complex c '''
        c = np.asarray(c, dtype=complex)
        return LogComplex(self.log_mag + c.real, self.phase * np.exp(1j * c.imag))

    def __mul__(self, other):
        if not isinstance(other, LogComplex):
            other = LogComplex.from_complex(other)
        return LogComplex(self.log_mag + other.log_mag, self.phase * other.phase)

    __rmul__ = __mul__

    def conj(self):
        return LogComplex(self.log_mag, np.conj(self.phase))

    def __getitem__(self, idx):
        return LogComplex(self.log_mag[idx], self.phase[idx])

    def __repr__(self):
        return 'LogComplex(log_mag=%s, phase=%s)' % (self.log_mag, self.phase)


def _weight_window(model, N, degree):
    ''' Half-width L with x^{2 degree} e^{-N V(x)} negligible beyond [-L, L] '''
    xs = np.linspace(1e-3, 8.0, 8000)
    with np.errstate(divide='ignore'):
        f = 2.0 * degree * np.log(xs) - N * model.V(xs)
    peak = np.max(f)
    beyond = np.flatnonzero((f < peak - 60.0) & (xs > xs[np.argmax(f)]))
    if not beyond.size:
        raise ConvergenceError('weight window exceeds [-8, 8]')
    return float(max(xs[beyond[0]], 1.0))


class OPTable:
    def __init__(self, N, beta, a2, gamma0, model, n_max=None, equilibrium=None,
                 closed_form=None):
        ''' Recurrence coefficients of the monic OPs for e^{-N V}

        pi_{n+1}(x) = (x - beta_n) pi_n(x) - a2[n] pi_{n-1}(x), a2[n] = (gamma_{n-1}/gamma_n)^2

        Parameters
        ----------
        N : int
            Ensemble size in the weight e^{-N V}

        beta, a2 : array_like
            Coefficients for n = 0 .. len - 1 (a2[0] is unused and stored as 0)

        gamma0 : float
            Leading coefficient of the orthonormal degree-0 polynomial

        model : str
            Model identifier

        n_max : int, optional
            Largest degree offered to callers (default len(beta) - 1)

        equilibrium : EquilibriumModel, optional
            Needed by the quadrature routes

        closed_form : callable, optional
            n -> (beta_n, a2[n]) used to extend the table on demand
        '''
        self.N = int(N)
        self.beta = np.asarray(beta, dtype=float)
        self.a2 = np.asarray(a2, dtype=float)
        self.a2[0] = 0.0
        self.gamma0 = float(gamma0)
        self.model = model
        self.n_max = int(n_max if n_max is not None else self.beta.size - 1)
        self.equilibrium = equilibrium
        self.closed_form = closed_form

    def __repr__(self):
        return 'OPTable(model=%r, N=%d, n_max=%d)' % (self.model, self.N, self.n_max)

    @property
    def is_gue(self):
        return self.model == 'gue'

    def coefficients(self, n_hi):
        ''' (beta, a2) for indices 0 .. n_hi, extending by closed form if needed '''
        if n_hi < self.beta.size:
            return self.beta[:n_hi + 1], self.a2[:n_hi + 1]
        if self.closed_form is None:
            raise ConvergenceError('table holds %d coefficients, %d requested'
                                   % (self.beta.size, n_hi + 1))
        n = np.arange(n_hi + 1)
        beta, a2 = self.closed_form(n)
        a2 = np.array(a2, dtype=float)
        a2[0] = 0.0
        return np.broadcast_to(np.asarray(beta, dtype=float), n.shape).copy(), a2

    def check_degree(self, n_lo, n_hi):
        ''' Raise DomainError unless 0 <= n_lo <= n_hi is served by the table '''
        if n_lo < 0 or n_hi < n_lo or (self.closed_form is None and n_hi > self.n_max):
            raise DomainError('degrees [%d, %d] outside [0, %d]' % (n_lo, n_hi, self.n_max))

    def log_gamma_sq(self, n):
        ''' log gamma_n^2 = log gamma_0^2 - sum_{k=1}^{n} log a2[k] '''
        _, a2 = self.coefficients(n)
        return 2.0 * np.log(self.gamma0) - np.sum(np.log(a2[1:n + 1]))

    def to_json(self, path):
        ''' Write the cache record {model, N, n_max, beta, a2, gamma0} '''
        emit({'model': self.model, 'N': self.N, 'n_max': self.n_max,
              'beta': self.beta.tolist(), 'a2': self.a2.tolist(),
              'gamma0': self.gamma0}, path, 'json')

    @classmethod
    def from_json(cls, path, equilibrium=None):
        with open(path, 'r') as f:
            rec = json.load(f)
        closed = _gue_coefficients(rec['N']) if rec['model'] == 'gue' else None
        return cls(rec['N'], rec['beta'], rec['a2'], rec['gamma0'], rec['model'],
                   n_max=rec['n_max'], equilibrium=equilibrium, closed_form=closed)


def _gue_coefficients(N):
    def closed_form(n):
        n = np.asarray(n, dtype=float)
        return np.zeros_like(n), n / (4.0 * N)
    return closed_form


def gamma0(model, N, method='auto'):
    ''' gamma_0 = (int e^{-N V})^{-1/2}; closed form (2N/pi)^{1/4} for the GUE '''
    if method == 'auto' and model.is_gue:
        return (2.0 * N / np.pi) ** 0.25
    L = _weight_window(model, N, 0)
    mass, _ = integrate.quad(lambda x: np.exp(-N * model.V(x)), -L, L, points=[0.0],
                             limit=400, epsabs=0.0, epsrel=1e-13)
    return mass ** -0.5


def _stieltjes_procedure(model, N, n_coef, n_check):
    L = _weight_window(model, N, n_coef)
    n_nodes = max(8 * n_coef, 400)
    nodes, weights = np.polynomial.legendre.leggauss(n_nodes)
    x = L * nodes
    v = N * model.V(x)
    w = L * weights * np.exp(-(v - v.min()))
    beta = np.zeros(n_coef + 1)
    a2 = np.zeros(n_coef + 1)
    p_prev = np.zeros_like(x)
    p = np.full_like(x, 1.0 / np.sqrt(w.sum()))
    basis = np.empty((n_check + 1, x.size))
    b = 0.0
    for n in range(n_coef + 1):
        if n <= n_check:
            basis[n] = p
        beta[n] = np.sum(w * x * p * p)
        if n == n_coef:
            break
        r = (x - beta[n]) * p - b * p_prev
        b = np.sqrt(np.sum(w * r * r))
        a2[n + 1] = b * b
        p_prev, p = p, r / b
    gram = (basis * w) @ basis.T
    residual = float(np.max(np.abs(gram - np.eye(n_check + 1))))
    if residual > ORTHO_TOL:
        raise OrthogonalityError('orthogonality residual %.2e up to degree %d; grid of %d '
                                 'nodes too coarse' % (residual, n_check, n_nodes))
    logger.debug('Stieltjes procedure: %d coefficients, residual %.2e', n_coef, residual)
    return beta, a2, residual


def recurrence_table(model, N, n_max, n_extra=None):
    ''' Recurrence coefficients for the weight e^{-N V} up to degree n_max

    Parameters
    ----------
    model : EquilibriumModel

    N : int

    n_max : int
        Largest degree callers will evaluate

    n_extra : int, optional
        Additional coefficients kept for backward continued fractions
        (general V only; the GUE table extends itself)

    Returns
    -------
    OPTable
    '''
    if n_max < 1:
        raise DomainError('n_max must be at least 1')
    if model.is_gue:
        closed = _gue_coefficients(N)
        beta, a2 = closed(np.arange(n_max + 1))
        return OPTable(N, beta, a2, gamma0(model, N), 'gue', n_max=n_max,
                       equilibrium=model, closed_form=closed)
    if n_extra is None:
        n_extra = max(64, 2 * n_max)
    beta, a2, _ = _stieltjes_procedure(model, N, n_max + n_extra, n_max)
    return OPTable(N, beta, a2, gamma0(model, N), model.name, n_max=n_max,
                   equilibrium=model)


def _forward(table, x, n_hi, start=None, keep=()):
    ''' Scaled forward recurrence; returns {n: LogComplex} for n in keep '''
    beta, a2 = table.coefficients(max(n_hi, 1))
    x = np.asarray(x, dtype=complex)
    if start is None:
        prev, cur = np.zeros_like(x), np.ones_like(x)
        n0 = 0
    else:
        prev, cur, n0 = start
    scale = np.zeros(x.shape)
    out = {}
    for n in range(n0, n_hi + 1):
        if n in keep:
            lc = LogComplex.from_complex(cur)
            out[n] = LogComplex(lc.log_mag + scale, lc.phase)
        if n == n_hi:
            break
        prev, cur = cur, (x - beta[n]) * cur - a2[n] * prev
        m = np.maximum(np.abs(cur), np.abs(prev))
        big = m > RESCALE
        if np.any(big):
            f = np.where(big, m, 1.0)
            prev, cur = prev / f, cur / f
            scale = scale + np.log(f)
    return out


def eval_pi(table, n, x):
    ''' Monic pi_n(x) by forward recurrence, as LogComplex '''
    table.check_degree(n, n)
    return _forward(table, x, n, keep=(n,))[n]


def eval_pi_range(table, x, n_lo, n_hi):
    ''' {n: pi_n(x)} for n_lo <= n <= n_hi '''
    table.check_degree(n_lo, n_hi)
    return _forward(table, x, n_hi, keep=range(n_lo, n_hi + 1))


def _check_off_axis(q):
    q = np.asarray(q, dtype=complex)
    if np.any(q.imag == 0):
        raise DomainError('Cauchy transform evaluated on the real axis')
    return q


def h0_faddeeva(table, q):
    ''' h_0 for the Gaussian weight e^{-2N x^2} through the Faddeeva function '''
    if not table.is_gue:
        raise DomainError('Faddeeva route needs the Gaussian weight')
    q = _check_off_axis(q)
    z = np.sqrt(2.0 * table.N) * q
    upper = q.imag > 0
    return np.where(upper, 0.5 * wofz(np.where(upper, z, np.conj(z))),
                    -0.5 * np.conj(wofz(np.where(upper, np.conj(z), z))))


def h0_quadrature(table, q):
    ''' h_0(q) = (1/2 pi i) int e^{-N V(x)} / (x - q) dx by adaptive quadrature '''
    if table.equilibrium is None:
        raise DomainError('quadrature route needs the equilibrium model')
    q = _check_off_axis(q)
    V = table.equilibrium.V
    N = table.N
    L = max(_weight_window(table.equilibrium, N, 0), 1.5 * np.max(np.abs(q.real)) + 1.0)
    out = np.empty(q.shape, dtype=complex)
    for idx, qq in np.ndenumerate(q):
        points = [0.0]
        if abs(qq.real) < L:
            points.append(float(qq.real))

        def part(f):
            val, _ = integrate.quad(f, -L, L, points=sorted(set(points)), limit=800,
                                    epsabs=0.0, epsrel=1e-12)
            return val
        re = part(lambda x: np.real(np.exp(-N * V(x)) / (x - qq)))
        im = part(lambda x: np.imag(np.exp(-N * V(x)) / (x - qq)))
        out[idx] = (re + 1j * im) / (2j * np.pi)
    return out if out.ndim else complex(out)


def _log_amplification(table, q, n):
    ''' Growth of the dominant over the minimal solution up to degree n '''
    beta, a2 = table.coefficients(max(n, 1))
    total = np.zeros(np.shape(q))
    for k in range(1, n + 1):
        b = q - beta[k]
        root = np.sqrt(b * b - 4.0 * a2[k])
        t1, t2 = 0.5 * (b + root), 0.5 * (b - root)
        total += np.abs(np.log(np.abs(t1)) - np.log(np.abs(t2)))
    return total


def _ratios(table, q, n):
    ''' r_k = h_k / h_{k-1} for k = 1..n by a backward continued fraction '''
    cap = CF_MAX_DEPTH if table.closed_form is not None else table.beta.size - 1
    if cap <= n:
        raise ConvergenceError('no coefficients beyond degree %d for the continued fraction' % n)
    depth = min(n + 64, cap)
    previous = None
    while True:
        beta, a2 = table.coefficients(depth)
        r = np.zeros_like(q)
        rs = np.empty((n + 1,) + q.shape, dtype=complex)
        for k in range(depth, 0, -1):
            r = a2[k] / ((q - beta[k]) - r)
            if k <= n:
                rs[k] = r
        if previous is not None:
            err = np.max(np.abs(rs[1:] - previous[1:]) / np.abs(rs[1:]))
            if err < CF_TOL:
                logger.debug('continued fraction converged at depth %d', depth)
                return rs
        if depth >= cap:
            raise ConvergenceError('continued fraction did not settle within %d terms' % cap)
        previous = rs
        depth = min(n + 2 * (depth - n), cap)


def eval_h_range(table, q, n_lo, n_hi, method='auto', h0_method='auto'):
    ''' Cauchy transforms h_n(q) for n_lo <= n <= n_hi

    Parameters
    ----------
    table : OPTable

    q : complex or array_like
        Off the real axis

    n_lo, n_hi : int
        Degree range

    method : {'auto', 'forward', 'backward'}
        Forward recurrence from h_0, or ratios from a backward continued
        fraction. 'auto' uses forward while the dominant solution grows by
        less than 1e4 relative to h_n.

    h0_method : {'auto', 'erf', 'quadrature', 'cf'}
        Route for h_0; 'auto' is 'erf' for the Gaussian weight, 'cf'
        for backward evaluation and 'quadrature' otherwise

    Returns
    -------
    dict
        {n: LogComplex}
    '''
    q = _check_off_axis(q)
    table.check_degree(n_lo, n_hi)
    if method == 'auto':
        amp = _log_amplification(table, q, n_hi)
        method = 'forward' if np.all(amp < FORWARD_LOG_AMPLIFICATION) else 'backward'
    if h0_method == 'auto':
        h0_method = 'erf' if table.is_gue else ('cf' if method == 'backward' else 'quadrature')
    c = table.gamma0 ** -2 / (2j * np.pi)
    rs = None
    if method == 'backward' or h0_method == 'cf':
        rs = _ratios(table, q, max(n_hi, 1))
    if h0_method == 'erf':
        h0 = h0_faddeeva(table, q)
    elif h0_method == 'quadrature':
        h0 = h0_quadrature(table, q)
    elif h0_method == 'cf':
        h0 = -c / ((q - table.beta[0]) - rs[1])
    else:
        raise DomainError('unknown h_0 route %r' % h0_method)
    if method == 'forward':
        h1 = (q - table.beta[0]) * h0 + c
        if n_hi == 0:
            return {0: LogComplex.from_complex(h0)}
        out = _forward(table, q, n_hi, start=(h0, h1, 1), keep=range(max(n_lo, 1), n_hi + 1))
        if n_lo == 0:
            out[0] = LogComplex.from_complex(h0)
        return out
    if method != 'backward':
        raise DomainError('unknown method %r' % method)
    cur = LogComplex.from_complex(h0)
    out = {}
    for n in range(0, n_hi + 1):
        if n > 0:
            cur = cur * rs[n]
            cur = LogComplex(cur.log_mag, cur.phase / np.abs(cur.phase))
        if n >= n_lo:
            out[n] = cur
    return out


def eval_h(table, n, q, method='auto', h0_method='auto'):
    ''' Cauchy transform h_n(q) = (1/2 pi i) int pi_n(x) e^{-N V(x)} / (x - q) dx '''
    return eval_h_range(table, q, n, n, method, h0_method)[n]


class RHMatrix:
    def __init__(self, entries, kind, q, log_scale=0.0):
        ''' 2x2 Riemann-Hilbert matrix with its columns rescaled

        The unscaled matrix is entries @ diag(e^{log_scale}, e^{-log_scale}),
        so det(entries) is the determinant of the unscaled matrix.
        '''
        self.entries = np.asarray(entries, dtype=complex)
        self.kind = kind
        self.q = q
        self.log_scale = float(log_scale)

    def det(self):
        e = self.entries
        return e[0, 0] * e[1, 1] - e[0, 1] * e[1, 0]

    def unscaled(self):
        s = self.log_scale
        return self.entries * np.array([np.exp(s), np.exp(-s)])[None, :]

    def norm(self):
        ''' Spectral norm of the unscaled matrix (kind M or M_infinity) '''
        return float(np.linalg.norm(self.unscaled(), 2))

    def __repr__(self):
        return 'RHMatrix(kind=%r, q=%r, log_scale=%g)' % (self.kind, self.q, self.log_scale)


def _y_entries(table, q, method='auto'):
    N = table.N
    table.check_degree(N - 1, N)
    pis = eval_pi_range(table, q, N - 1, N)
    hs = eval_h_range(table, q, N - 1, N, method)
    factor = LogComplex.from_complex(-2j * np.pi).times_exp(table.log_gamma_sq(N - 1))
    return pis[N], hs[N], factor * pis[N - 1], factor * hs[N - 1]


def _assemble(y11, y12, y21, y22, kind, q, s):
    entries = [[y11.scaled(s), y12.scaled(-s)], [y21.scaled(s), y22.scaled(-s)]]
    mat = RHMatrix(entries, kind, q, s)
    det = mat.det()
    if not abs(det - 1.0) <= DET_TOL:
        raise InstabilityError('det %s = %r at q = %r' % (kind, det, q))
    return mat


def y_matrix(table, q, method='auto'):
    ''' Y_N(q) = [[pi_N, h_N], [-2 pi i gamma_{N-1}^2 pi_{N-1}, -2 pi i gamma_{N-1}^2 h_{N-1}]] '''
    q = complex(q)
    y11, y12, y21, y22 = _y_entries(table, q, method)
    return _assemble(y11, y12, y21, y22, 'Y', q, float(y11.log_mag))


def m_matrix(table, model, q, method='auto'):
    ''' M_N = e^{-N ell sigma3 / 2} Y_N e^{-N (g - ell/2) sigma3}, built in log form '''
    q = complex(q)
    N = table.N
    y11, y12, y21, y22 = _y_entries(table, q, method)
    ng = N * complex(model.g(q))
    nl = N * model.ell_v
    m11 = y11.times_exp(-ng)
    m12 = y12.times_exp(ng - nl)
    m21 = y21.times_exp(nl - ng)
    m22 = y22.times_exp(ng)
    return _assemble(m11, m12, m21, m22, 'M', q, 0.0)


def gamma_onecut(q):
    ''' ((q + 1)/(q - 1))^{1/4}, tending to 1 at infinity, cut on [-1, 1] '''
    q = np.asarray(q, dtype=complex)
    return np.exp(0.25 * (np.log(q + 1.0) - np.log(q - 1.0)))


def _parametrix_entries(gam):
    p = 0.5 * (gam + 1.0 / gam)
    m = gam - 1.0 / gam
    return np.array([[p, m / (-2j)], [m / 2j, p]])


def global_parametrix_onecut(q):
    ''' Global parametrix for the one-cut case, support [-1, 1]

    The same formula serves both half-planes; its boundary values satisfy
    M_+ = M_- [[0, 1], [-1, 0]] on (-1, 1).
    '''
    q = complex(q)
    if q.imag == 0 and -1.0 <= q.real <= 1.0:
        raise DomainError('global parametrix evaluated on the cut')
    return RHMatrix(_parametrix_entries(gamma_onecut(q)), 'M_infinity', q)


def global_parametrix_boundary(x, side=1):
    ''' Boundary value of the global parametrix at x in (-1, 1) from above (+1) or below (-1) '''
    if not -1.0 < x < 1.0:
        raise DomainError('boundary value needs x in (-1, 1)')
    gam = ((1.0 + x) / (1.0 - x)) ** 0.25 * np.exp(-0.25j * np.pi * side)
    return RHMatrix(_parametrix_entries(gam), 'M_infinity', complex(x, 0.0))


def r_weight(model, q):
    ''' R(q) = prod over support edges |q - e|^{-1/4} '''
    q = np.asarray(q, dtype=complex)
    with np.errstate(divide='ignore'):
        out = np.ones(q.shape)
        for e in model.edges:
            out = out * np.abs(q - e) ** -0.25
    return out if out.ndim else float(out)


def y_jump_residual(table, x, eps=1e-6):
    ''' Relative mismatch of Y_+ = Y_- [[1, e^{-N V(x)}], [0, 1]] at real x '''
    if table.equilibrium is None:
        raise DomainError('jump check needs the equilibrium model')
    plus = y_matrix(table, complex(x, eps)).unscaled()
    minus = y_matrix(table, complex(x, -eps)).unscaled()
    jump = np.array([[1.0, np.exp(-table.N * table.equilibrium.V(x))], [0.0, 1.0]])
    return float(np.max(np.abs(plus - minus @ jump)) / np.max(np.abs(plus)))


def m_bound_sweep(table, model, qs):
    ''' Smallest C with ||M_N(q)|| <= C (R(q) + 1) over the given points '''
    ratios = [m_matrix(table, model, q).norm() / (r_weight(model, q) + 1.0) for q in qs]
    return float(np.max(ratios))
