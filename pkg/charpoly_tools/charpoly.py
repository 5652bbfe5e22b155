"""Expected products and ratios of characteristic polynomials.

Determinants built from pi_n and h_n are assembled from LogComplex entries:
each row and column is rescaled by its largest log-magnitude before
``numpy.linalg.slogdet``, and the scale is added back afterwards.
"""
import itertools
import logging
from collections import namedtuple

import numpy as np
import pandas as pd

from .ensemble import gue_model, sample_gue_batch
from .errors import DegenerateConfigurationError, DomainError, InstabilityError
from .hyperbolic import joukowsky
from .orthopoly import LogComplex, eval_h_range, eval_pi_range, r_weight, recurrence_table
from .rng import map_tasks, substream

logger = logging.getLogger(__name__)

IMAG_TOL = 1e-8
MAX_UNBALANCED = 4

MCEstimate = namedtuple('MCEstimate', ['mean', 'stderr', 'n_samples'])


def vandermonde_matrix(points):
    ''' V(q) with entries q_i^j, i, j = 0 .. k-1 '''
    points = np.asarray(points, dtype=complex).ravel()
    return np.vander(points, increasing=True)


def vandermonde_det(points):
    ''' Delta(q) = prod_{i<j} (q_j - q_i); 1 for fewer than two points '''
    points = np.asarray(points, dtype=complex).ravel()
    out = 1.0 + 0j
    for i, j in itertools.combinations(range(points.size), 2):
        out *= points[j] - points[i]
    return out


def log_vandermonde(points):
    ''' Delta(q) as LogComplex; DegenerateConfigurationError if two points coincide '''
    points = np.asarray(points, dtype=complex).ravel()
    log_mag, phase = 0.0, 1.0 + 0j
    for i, j in itertools.combinations(range(points.size), 2):
        d = points[j] - points[i]
        if d == 0:
            raise DegenerateConfigurationError('coincident points %r' % points[i])
        log_mag += np.log(abs(d))
        phase *= d / abs(d)
    return LogComplex(log_mag, phase)


def log_det(entries):
    ''' Determinant of a square LogComplex matrix, as LogComplex '''
    log_mag = np.array(entries.log_mag, dtype=float)
    n = log_mag.shape[0]
    if n == 0:
        return LogComplex(0.0, 1.0)
    finite = np.where(np.isfinite(log_mag), log_mag, -np.inf)
    rows = np.max(finite, axis=1)
    if np.any(~np.isfinite(rows)):
        return LogComplex(-np.inf, 1.0)
    cols = np.max(finite - rows[:, None], axis=0)
    if np.any(~np.isfinite(cols)):
        return LogComplex(-np.inf, 1.0)
    with np.errstate(under='ignore'):
        mat = np.exp(log_mag - rows[:, None] - cols[None, :]) * entries.phase
    sign, logabs = np.linalg.slogdet(mat)
    if sign == 0:
        return LogComplex(-np.inf, 1.0)
    return LogComplex(logabs + rows.sum() + cols.sum(), sign)


def _monomial_block(base, points, width):
    ''' Rows base_i * points_i^j for j < width '''
    points = np.asarray(points, dtype=complex)
    j = np.arange(width)
    unit = np.where(points != 0, points / np.where(points != 0, np.abs(points), 1.0), 1.0)
    with np.errstate(divide='ignore', invalid='ignore'):
        lp = np.log(np.abs(points))
        log_mag = base.log_mag[:, None] + np.where(j == 0, 0.0, j[None, :] * lp[:, None])
    phase = base.phase[:, None] * unit[:, None] ** j[None, :]
    return LogComplex(log_mag, phase)


def _stack(blocks):
    ''' Assemble a LogComplex matrix from a nested list of LogComplex blocks '''
    log_mag = np.block([[b.log_mag for b in row] for row in blocks])
    phase = np.block([[b.phase for b in row] for row in blocks])
    return LogComplex(log_mag, phase)


def _tilde_factor(table):
    ''' -2 pi i gamma_{N-1}^2 as LogComplex '''
    return LogComplex(np.log(2.0 * np.pi) + table.log_gamma_sq(table.N - 1), -1j)


def _pi_pair(table, points):
    N = table.N
    pis = eval_pi_range(table, points, N - 1, N)
    return pis[N], _tilde_factor(table) * pis[N - 1]


def _h_pair(table, points):
    points = np.asarray(points, dtype=complex)
    if np.any(points.imag == 0):
        raise DomainError('denominator points must lie off the real axis')
    N = table.N
    hs = eval_h_range(table, points, N - 1, N)
    return hs[N], _tilde_factor(table) * hs[N - 1]


def _as_points(points):
    return np.atleast_1d(np.asarray(points, dtype=complex)).ravel()


def fs_balanced_log(table, p, q):
    ''' Balanced ratio E[prod det(p_i - A) / prod det(q_j - A)] as LogComplex

    Parameters
    ----------
    table : OPTable
        Recurrence table reaching degree N

    p, q : sequence of complex
        Numerator and denominator points, both of length l >= 1; q off
        the real axis; points within p and within q distinct

    Returns
    -------
    LogComplex
    '''
    p, q = _as_points(p), _as_points(q)
    ell = p.size
    if ell < 1 or q.size != ell:
        raise DomainError('balanced ratio needs len(p) == len(q) >= 1')
    if table.N < ell:
        raise DomainError('N must be at least l')
    denom = log_vandermonde(q) * log_vandermonde(p)
    h, h_tilde = _h_pair(table, q)
    pi, pi_tilde = _pi_pair(table, p)
    mat = _stack([[_monomial_block(h_tilde, q, ell), _monomial_block(h, q, ell)],
                  [_monomial_block(pi_tilde, p, ell), _monomial_block(pi, p, ell)]])
    det = log_det(mat)
    return LogComplex(det.log_mag - denom.log_mag, det.phase * np.conj(denom.phase))


def fs_balanced(table, p, q):
    ''' E[prod det(p_i - A) / prod det(q_j - A)] for len(p) == len(q) '''
    return complex(fs_balanced_log(table, p, q).value())


def fs_general_log(table, p, q):
    ''' Unbalanced ratio with l = len(p) numerator and k = len(q) denominator points

    The (k + l) x (k + l) determinant has columns n = N - k .. N + l - 1,
    h_n(q_i) rows above pi_n(p_j) rows, and prefactor
    prod_{j=1}^{k} (-2 pi i gamma_{N-j}^2) / ((-1)^{k(k-1)/2} Delta(q) Delta(p)).
    '''
    p, q = _as_points(p), _as_points(q)
    k, ell = q.size, p.size
    if k > MAX_UNBALANCED or ell > MAX_UNBALANCED:
        raise DomainError('at most %d points on each side' % MAX_UNBALANCED)
    N = table.N
    if N < k:
        raise DomainError('N must be at least k')
    if k + ell == 0:
        return LogComplex(0.0, 1.0)
    if np.any(q.imag == 0):
        raise DomainError('denominator points must lie off the real axis')
    lo, hi = N - k, N + ell - 1
    blocks = []
    if k:
        hs = eval_h_range(table, q, lo, hi)
        blocks.append([LogComplex(np.stack([hs[n].log_mag for n in range(lo, hi + 1)], axis=1),
                                  np.stack([hs[n].phase for n in range(lo, hi + 1)], axis=1))])
    if ell:
        pis = eval_pi_range(table, p, lo, hi)
        blocks.append([LogComplex(np.stack([pis[n].log_mag for n in range(lo, hi + 1)], axis=1),
                                  np.stack([pis[n].phase for n in range(lo, hi + 1)], axis=1))])
    det = log_det(_stack(blocks))
    log_pre = sum(np.log(2.0 * np.pi) + table.log_gamma_sq(N - j) for j in range(1, k + 1))
    phase_pre = (-1j) ** k * (-1.0) ** (k * (k - 1) // 2)
    denom = log_vandermonde(q) * log_vandermonde(p)
    return LogComplex(det.log_mag + log_pre - denom.log_mag,
                      det.phase * phase_pre * np.conj(denom.phase))


def fs_general(table, p, q):
    ''' E[prod det(p_i - A) / prod det(q_j - A)] for up to four points per side '''
    return complex(fs_general_log(table, p, q).value())


def _bias_planes(bias):
    ''' p = J(conj Z u Z), q = J(conj W u W) '''
    z, w = bias.plus_points, bias.minus_points
    return (joukowsky(np.concatenate([np.conj(z), z])),
            joukowsky(np.concatenate([np.conj(w), w])))


def exp_moment_field(table, model, bias):
    ''' E[exp B(Z_N)] for B(F) = sum_Z 2F(z) - sum_W 2F(w), F(z) = Q_N(J(z))

    Evaluated with the entries of M_N, so the factors e^{+-N g} enter only
    through their logarithms:

        rows for q:  [M22(q) V(q), M12(q) V(q)]
        rows for p:  [M21(p) V(p), M11(p) V(p)]

    divided by Delta(q) Delta(p).

    Parameters
    ----------
    table : OPTable

    model : EquilibriumModel
        Supplies g and ell_V

    bias : BiasSpec
        Disk points; |Z| must equal |W|

    Returns
    -------
    float
        The real positive moment
    '''
    if len(bias) == 0:
        return 1.0
    if bias.plus_points.size != bias.minus_points.size:
        raise DomainError('exp_moment_field needs |Z| == |W|')
    p, q = _bias_planes(bias)
    ell = p.size
    N = table.N
    nl = N * model.ell_v
    ng_q = N * np.asarray(model.g(q), dtype=complex)
    ng_p = N * np.asarray(model.g(p), dtype=complex)
    h, h_tilde = _h_pair(table, q)
    pi, pi_tilde = _pi_pair(table, p)
    m22, m12 = h_tilde.times_exp(ng_q), h.times_exp(ng_q - nl)
    m21, m11 = pi_tilde.times_exp(nl - ng_p), pi.times_exp(-ng_p)
    mat = _stack([[_monomial_block(m22, q, ell), _monomial_block(m12, q, ell)],
                  [_monomial_block(m21, p, ell), _monomial_block(m11, p, ell)]])
    det = log_det(mat)
    denom = log_vandermonde(q) * log_vandermonde(p)
    value = complex(LogComplex(det.log_mag - denom.log_mag,
                               det.phase * np.conj(denom.phase)).value())
    if abs(value.imag) > IMAG_TOL * abs(value) or value.real <= 0:
        raise InstabilityError('moment %r is not real positive' % value)
    return value.real


def split_matrix(A, B, C, D, p, q):
    ''' [[A V(q), B V(q)], [C V(p), D V(p)]] for diagonal A, B, C, D '''
    diag = [np.diag(m) if np.ndim(m) == 2 else np.asarray(m) for m in (A, B, C, D)]
    a, b, c, d = [np.asarray(m, dtype=complex) for m in diag]
    vq, vp = vandermonde_matrix(q), vandermonde_matrix(p)
    return np.block([[a[:, None] * vq, b[:, None] * vq],
                     [c[:, None] * vp, d[:, None] * vp]])


def laplace_split(A, B, C, D, p, q):
    ''' Subset expansion of det [[A V(q), B V(q)], [C V(p), D V(p)]]

    Sums over S, T subsets of [l] with |S| + |T| = l the terms
    Delta(q_S, p_T) Delta(q_S*, p_T*) prod A_S prod C_T prod B_S* prod D_T*,
    signed by the parity of the chosen rows in the Laplace expansion along
    the first l columns.
    '''
    diag = [np.diag(m) if np.ndim(m) == 2 else np.asarray(m) for m in (A, B, C, D)]
    a, b, c, d = [np.asarray(m, dtype=complex) for m in diag]
    p, q = _as_points(p), _as_points(q)
    ell = q.size
    if ell > 5:
        raise DomainError('laplace_split supports l <= 5')
    idx = range(ell)
    total = 0.0 + 0j
    for s_size in range(ell + 1):
        for S in itertools.combinations(idx, s_size):
            S_star = [i for i in idx if i not in S]
            for T in itertools.combinations(idx, ell - s_size):
                T_star = [i for i in idx if i not in T]
                # 1-based rows of the minor: q rows 1..l, p rows l+1..2l
                rows = sum(i + 1 for i in S) + sum(ell + i + 1 for i in T)
                sign = (-1) ** (rows + ell * (ell + 1) // 2)
                first = vandermonde_det(np.concatenate([q[list(S)], p[list(T)]]))
                second = vandermonde_det(np.concatenate([q[S_star], p[T_star]]))
                total += (sign * first * second * np.prod(a[list(S)]) * np.prod(c[list(T)])
                          * np.prod(b[S_star]) * np.prod(d[T_star]))
    return total


def exp_pm2_moment(table, model, q, sign):
    ''' E exp(+-2 Q_N(q)) for q off the real axis

    Plus sign:  [pi_N(q) pi_{N+1}(conj q) - pi_{N+1}(q) pi_N(conj q)] / (conj q - q)
    Minus sign: the two-point denominator ratio with h_{N-2}, h_{N-1}
    Both are scaled by exp(-+N (g(q) + g(conj q))) = exp(-+2 N Re g(q)).
    '''
    q = complex(q)
    if q.imag == 0:
        raise DomainError('exp_pm2_moment needs q off the real axis')
    N = table.N
    two_re_g = 2.0 * N * complex(model.g(q)).real
    if sign > 0:
        pis = eval_pi_range(table, q, N, N + 1)
        cross = -(pis[N].phase * np.conj(pis[N + 1].phase)).imag / q.imag
        log_mag = pis[N].log_mag + pis[N + 1].log_mag
        log_value = log_mag - two_re_g
    elif sign < 0:
        if N < 2:
            raise DomainError('minus sign needs N >= 2')
        hs = eval_h_range(table, q, N - 2, N - 1)
        cross = (hs[N - 2].phase * np.conj(hs[N - 1].phase)).imag / q.imag
        log_mag = (hs[N - 2].log_mag + hs[N - 1].log_mag + 2.0 * np.log(2.0 * np.pi)
                   + table.log_gamma_sq(N - 1) + table.log_gamma_sq(N - 2))
        log_value = log_mag + two_re_g
    else:
        raise DomainError('sign must be +1 or -1')
    cross = float(cross)
    if cross <= 0:
        raise InstabilityError('nonpositive moment at q = %r' % q)
    return float(np.exp(float(log_value) + np.log(cross)))


def laplace_bound_sweep(table, model, xs=None, ys=None):
    ''' exp_pm2_moment normalized by (1 + |Im q|) R(q)^2 / |Im q| over a grid

    Parameters
    ----------
    table : OPTable
        Needs degrees up to N + 1

    model : EquilibriumModel

    xs : array_like, optional
        Real parts, default 9 points in [-0.8, 0.8]

    ys : array_like, optional
        Imaginary parts, default log-spaced in [1/N, 1]

    Returns
    -------
    pandas.DataFrame
        x, y, plus, minus, plus_normalized, minus_normalized
    '''
    N = table.N
    xs = np.linspace(-0.8, 0.8, 9) if xs is None else np.asarray(xs, dtype=float)
    ys = np.geomspace(1.0 / N, 1.0, 7) if ys is None else np.asarray(ys, dtype=float)
    rows = []
    for x in xs:
        for y in ys:
            q = complex(x, y)
            norm = (1.0 + abs(y)) * r_weight(model, q) ** 2 / abs(y)
            plus = exp_pm2_moment(table, model, q, 1)
            minus = exp_pm2_moment(table, model, q, -1)
            rows.append({'x': x, 'y': y, 'plus': plus, 'minus': minus,
                         'plus_normalized': plus / norm, 'minus_normalized': minus / norm})
    return pd.DataFrame(rows, columns=['x', 'y', 'plus', 'minus', 'plus_normalized',
                                       'minus_normalized'])


def _mc_chunk(task):
    N, p, q, n, seed, index = task
    lam = sample_gue_batch(N, n, substream(seed, index))
    ratio = np.ones(n, dtype=complex)
    for pp in p:
        ratio *= np.prod(pp - lam, axis=1)
    for qq in q:
        ratio /= np.prod(qq - lam, axis=1)
    return ratio


def mc_ratio(N, p, q, n_samples, seed, n_batches=100, chunk=100000, threads=1):
    ''' Monte Carlo estimate of E[prod det(p_i - A) / prod det(q_j - A)] over the GUE

    Parameters
    ----------
    N : int

    p, q : sequence of complex

    n_samples : int

    seed : int
        Chunk i draws from substream(seed, i)

    n_batches : int, optional
        Batches for the batch-means standard error

    chunk : int, optional
        Matrices per task

    threads : int, optional

    Returns
    -------
    MCEstimate
        mean (complex) and stderr, the modulus of the real and imaginary
        batch-means standard errors
    '''
    p, q = list(_as_points(p)), list(_as_points(q))
    sizes = [min(chunk, n_samples - s) for s in range(0, n_samples, chunk)]
    tasks = [(N, p, q, m, seed, i) for i, m in enumerate(sizes)]
    values = np.concatenate(map_tasks(_mc_chunk, tasks, threads))
    n_batches = max(2, min(n_batches, values.size))
    means = np.array([b.mean() for b in np.array_split(values, n_batches)])
    se = np.hypot(means.real.std(ddof=1), means.imag.std(ddof=1)) / np.sqrt(n_batches)
    return MCEstimate(complex(values.mean()), float(se), values.size)


class FsVerify:
    def __init__(self, cases=None, n_samples=1000000, seed=0, threads=1):
        ''' Formula-vs-Monte-Carlo report for characteristic polynomial ratios

        Parameters
        ----------
        cases : list of dict, optional
            Each with keys case_id, N, p, q; defaults to ``default_cases()``

        n_samples : int, optional
            Monte Carlo sample size per case

        seed : int, optional

        threads : int, optional

        Attributes
        ----------
        df : pandas.DataFrame
            case_id, N, formula_value, mc_value, mc_stderr, z_score,
            formula_imag, mc_imag, method ('balanced' when |p| = |q|, else 'general')
        '''
        if cases is None:
            cases = default_cases()
        model = gue_model()
        rows = []
        for i, case in enumerate(cases):
            N = case['N']
            table = recurrence_table(model, N, N + len(case['p']))
            if len(case['p']) == len(case['q']):
                method, formula = 'balanced', fs_balanced(table, case['p'], case['q'])
            else:
                method, formula = 'general', fs_general(table, case['p'], case['q'])
            est = mc_ratio(N, case['p'], case['q'], n_samples, seed + i, threads=threads)
            mc, se = est.mean, est.stderr
            z = abs(formula - mc) / se if se > 0 else np.inf
            logger.debug('case %s: formula %r mc %r z %.2f', case['case_id'], formula, mc, z)
            rows.append({'case_id': case['case_id'], 'N': N,
                         'formula_value': formula.real, 'mc_value': mc.real,
                         'mc_stderr': se, 'z_score': z,
                         'formula_imag': formula.imag, 'mc_imag': mc.imag, 'method': method})
        self.df = pd.DataFrame(rows, columns=['case_id', 'N', 'formula_value', 'mc_value',
                                              'mc_stderr', 'z_score', 'formula_imag',
                                              'mc_imag', 'method'])

    def head(self, n=5):
        return self.df.sort_values('z_score', ascending=False).head(n)

    def summary(self):
        return pd.Series({'cases': len(self.df), 'max_z_score': self.df['z_score'].max(),
                          'mean_z_score': self.df['z_score'].mean()})

    def passed(self, threshold=3.0):
        return bool((self.df['z_score'] <= threshold).all())

    def report(self):
        lines = ['%-14s %4s %14s %14s %10s %7s' % ('case', 'N', 'formula', 'monte carlo',
                                                 'stderr', 'z')]
        for _, r in self.df.iterrows():
            lines.append('%-14s %4d %14.6g %14.6g %10.3g %7.2f' % (
                r['case_id'], r['N'], r['formula_value'], r['mc_value'], r['mc_stderr'],
                r['z_score']))
        return '\n'.join(lines)


def default_cases():
    ''' The ratio cases checked by fs-verify '''
    return [
        {'case_id': 'balanced_l1', 'N': 4, 'p': [0.3 + 0.4j], 'q': [-0.2 + 0.5j]},
        {'case_id': 'balanced_l1_n6', 'N': 6, 'p': [-0.5 + 0.2j], 'q': [0.4 + 0.45j]},
        {'case_id': 'numerator', 'N': 4, 'p': [0.3 + 0.4j], 'q': []},
        {'case_id': 'denominator', 'N': 4, 'p': [], 'q': [0.1 + 0.6j]},
        {'case_id': 'two_by_two', 'N': 4, 'p': [0.2 + 0.3j, -0.4 + 0.1j],
         'q': [0.1 + 0.7j, -0.3 - 0.6j]},
    ]
