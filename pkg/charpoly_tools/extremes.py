"""The centered log-characteristic polynomial Q_N and its maximum over [-1, 1].

Q_N(q) = sum_i log|q - lambda_i| - N int log|q - u| rho(du)
"""
import logging
from collections import namedtuple
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.optimize import minimize_scalar

from .ensemble import sample_spectrum
from .errors import DomainError
from .rng import map_tasks, substream

logger = logging.getLogger(__name__)

BLOCK_ROWS = 512
FACTOR = 14.0
N_POLISH = 5

Factor14Record = namedtuple('Factor14Record', ['max_ratio', 'dense_max', 'grid_max',
                                               'argmax', 'lift_residual', 'ok'])


@dataclass
class MaxRecord:
    N: int
    seed: int
    m_star: float
    m_star_reg: float = np.nan
    y: float = np.nan
    center: str = 'g_centering'
    ordering_ok: bool = True


def log_abs_sum(eigenvalues, q):
    ''' sum_i log|q - lambda_i| for every q, blocked over rows of q '''
    lam = np.asarray(eigenvalues, dtype=float)
    q = np.asarray(q)
    flat = q.ravel()
    out = np.empty(flat.shape)
    with np.errstate(divide='ignore'):
        for start in range(0, flat.size, BLOCK_ROWS):
            block = flat[start:start + BLOCK_ROWS]
            out[start:start + BLOCK_ROWS] = np.log(np.abs(block[:, None] - lam[None, :])).sum(axis=1)
    if np.any(np.isneginf(out)):
        logger.warning('field evaluated at an eigenvalue; value set to -inf')
    return out.reshape(q.shape)


def centering(model, N, q):
    ''' N int log|q - u| rho(du): N Re g(q) off the axis, -N g_tilde(x) on it '''
    return N * np.asarray(model.log_potential(q), dtype=float)


def field_q(spectrum, model, q, center=None):
    ''' Q_N(q) for a sampled spectrum

    Parameters
    ----------
    spectrum : Spectrum

    model : EquilibriumModel

    q : complex or array_like

    center : array_like, optional
        Precomputed ``centering(model, N, q)``; general models evaluate
        the log-potential by quadrature, so experiments compute it once

    Returns
    -------
    float or ndarray
        -inf where q hits an eigenvalue
    '''
    if center is None:
        center = centering(model, spectrum.N, q)
    out = log_abs_sum(spectrum.eigenvalues, q) - center
    return out if np.ndim(out) else float(out)


def cheb_grid(N):
    ''' x_k = cos(pi k / 2N), k = 0 .. 2N, descending from 1 to -1 '''
    if N < 1:
        raise DomainError('N must be at least 1')
    return np.cos(np.pi * np.arange(2 * N + 1) / (2.0 * N))


def _log_abs_poly(poly, roots, x):
    x = np.asarray(x, dtype=float)
    if roots is not None:
        with np.errstate(divide='ignore'):
            return np.log(np.abs(x[..., None] - np.asarray(roots)[None, :])).sum(axis=-1)
    with np.errstate(divide='ignore'):
        return np.log(np.abs(poly(x)))


def cheb_lift_residual(roots, n_circle=None):
    ''' Coefficient mass of W(w) = P(J(w)) w^N outside degrees 0 .. 2N

    W is a polynomial of degree 2N, and |W| = |P(J(w))| on the unit circle.
    The coefficients are read off an FFT over ``n_circle`` roots of unity.
    '''
    roots = np.asarray(roots, dtype=complex)
    N = roots.size
    m = n_circle or 4 * N + 8
    w = np.exp(2j * np.pi * np.arange(m) / m)
    j = 0.5 * (w + 1.0 / w)
    log_w = np.log(np.abs(j[:, None] - roots[None, :])).sum(axis=1)
    phase = np.prod((j[:, None] - roots[None, :]) / np.abs(j[:, None] - roots[None, :]), axis=1)
    values = np.exp(log_w - log_w.max()) * phase * w ** N
    coeffs = np.fft.fft(values) / m
    outside = np.abs(coeffs[2 * N + 1:])
    return float(np.sqrt(np.sum(outside ** 2) / np.sum(np.abs(coeffs) ** 2)))


def factor14_check(poly=None, roots=None, N=None):
    ''' Ratio of max |P| on [-1, 1] to its max over cheb_grid(N)

    Parameters
    ----------
    poly : sequence or numpy.polynomial instance, optional
        Power-basis coefficients (increasing degree) or a polynomial object

    roots : array_like, optional
        Roots of a monic P; preferred for large N

    N : int, optional
        Degree (inferred when omitted)

    Returns
    -------
    Factor14Record
        ``max_ratio`` is exp(dense log-max - grid log-max); the dense grid
        has 8N + 1 Chebyshev points with a bounded polish around the
        largest peaks
    '''
    if roots is not None:
        roots = np.asarray(roots)
        degree = roots.size
        fn = None
    else:
        fn = poly if callable(poly) else np.polynomial.Polynomial(poly)
        degree = fn.degree()
    N = max(int(N if N is not None else degree), 1)
    grid_log = _log_abs_poly(fn, roots, cheb_grid(N))
    dense_x = np.cos(np.pi * np.arange(8 * N + 1) / (8.0 * N))
    dense_log = _log_abs_poly(fn, roots, dense_x)
    best, arg = float(np.max(dense_log)), float(dense_x[np.argmax(dense_log)])
    for k in np.argsort(dense_log)[::-1][:N_POLISH]:
        lo, hi = dense_x[min(k + 1, dense_x.size - 1)], dense_x[max(k - 1, 0)]
        if hi <= lo:
            continue
        res = minimize_scalar(lambda t: -_log_abs_poly(fn, roots, t), bounds=(lo, hi),
                              method='bounded', options={'xatol': 1e-12})
        if -res.fun > best:
            best, arg = float(-res.fun), float(res.x)
    grid_max = float(np.max(grid_log))
    ratio = float(np.exp(best - grid_max))
    lift = cheb_lift_residual(roots) if roots is not None and roots.size else 0.0
    ok = ratio <= FACTOR
    if not ok:
        logger.warning('factor-14 bound exceeded: ratio %.3f at x = %.6f', ratio, arg)
    return Factor14Record(ratio, best, grid_max, arg, lift, ok)


def chebyshev_roots(N):
    ''' Roots of the degree-N Chebyshev polynomial T_N '''
    return np.cos(np.pi * (np.arange(N) + 0.5) / N)


def factor14_sweep(n_polys=1000, max_degree=256, seed=0):
    ''' factor14_check on random root sets and on Chebyshev extremal cases

    Random case i draws its degree uniformly in [1, max_degree] and its real
    roots uniformly in [-1.2, 1.2] from substream(seed, i).

    Returns
    -------
    pandas.DataFrame
        case, degree, max_ratio, argmax, lift_residual, ok
    '''
    rows = []
    for i in range(n_polys):
        rng = substream(seed, i)
        degree = int(rng.integers(1, max_degree + 1))
        rec = factor14_check(roots=rng.uniform(-1.2, 1.2, degree))
        rows.append(('random_%04d' % i, degree, rec))
    for degree in (1, 2, 3, 8, 64, max_degree):
        rows.append(('chebyshev_%d' % degree, degree,
                     factor14_check(roots=chebyshev_roots(degree))))
    return pd.DataFrame([{'case': c, 'degree': d, 'max_ratio': r.max_ratio, 'argmax': r.argmax,
                          'lift_residual': r.lift_residual, 'ok': r.ok} for c, d, r in rows])


def regularization_constant(model):
    ''' C_V = pi ||rho||_inf / 3 + log 14 + (pi/2) max |V'/2| on the support '''
    x = np.linspace(model.left, model.right, 2001)
    lip = float(np.max(np.abs(model.dV(x)))) / 2.0 if model.dV is not None else 0.0
    return np.pi * model.rho_max / 3.0 + np.log(FACTOR) + 0.5 * np.pi * lip


def equilibrium_shift(model, x, y, N):
    ''' N (Re g(x - i y/N) - Re g(x)) on the real grid x '''
    x = np.asarray(x, dtype=float)
    return N * (np.asarray(model.log_potential(x - 1j * y / N)) - np.asarray(model.log_potential(x)))


def regularized_max(spectrum, model, y, grid_center=None, shifted_center=None, c_v=None):
    ''' Maxima of Q_N on the Chebyshev grid and on the grid shifted to x_k - i y / N

    Returns
    -------
    MaxRecord
        ``ordering_ok`` records m_star <= m_star_reg + C_V y
    '''
    if y < 1:
        raise DomainError('y must be at least 1')
    N = spectrum.N
    x = cheb_grid(N)
    q = x - 1j * y / N
    m_star = float(np.max(field_q(spectrum, model, x, grid_center)))
    m_reg = float(np.max(field_q(spectrum, model, q, shifted_center)))
    c_v = regularization_constant(model) if c_v is None else c_v
    ok = m_star <= m_reg + c_v * y
    if not ok:
        logger.warning('regularization ordering fails: %.4f > %.4f + %.3f y', m_star, m_reg, c_v)
    return MaxRecord(N, spectrum.seed, m_star, m_reg, float(y), 'g_centering', bool(ok))


def circle_max(spectrum, model, radius=2.0, n=256):
    ''' max of Q_N over n equispaced points of the circle |q| = radius '''
    q = radius * np.exp(2j * np.pi * (np.arange(n) + 0.5) / n)
    return float(np.max(field_q(spectrum, model, q)))


def _max_task(task):
    model, N, seed, i, y, grid_center, shifted_center, c_v, sweeps, step = task
    spectrum = sample_spectrum(model, N, seed, sub=(i,), sweeps=sweeps, step=step)
    if y is None:
        m = float(np.max(field_q(spectrum, model, cheb_grid(N), grid_center)))
        return MaxRecord(N, i, m)
    rec = regularized_max(spectrum, model, y, grid_center, shifted_center, c_v)
    rec.seed = i
    return rec


def max_experiment(model, N, n_samples, y=None, seed=0, threads=1, sweeps=None, step=None):
    ''' Grid maximum of Q_N for n_samples independent spectra

    Sample i is drawn from substream(seed, i); records come back in sample
    order with ``seed`` holding the sample index.
    '''
    if n_samples < 1:
        raise DomainError('n_samples must be at least 1')
    x = cheb_grid(N)
    grid_center = centering(model, N, x)
    shifted_center, c_v = None, None
    if y is not None:
        shifted_center = centering(model, N, x - 1j * y / N)
        c_v = regularization_constant(model)
    tasks = [(model, N, seed, i, y, grid_center, shifted_center, c_v, sweeps, step)
             for i in range(n_samples)]
    return map_tasks(_max_task, tasks, threads)


def second_order_center(N):
    ''' log N - (3/4) log log N '''
    return np.log(N) - 0.75 * np.log(np.log(N))


class MaxExperiment:
    def __init__(self, model, N, n_samples, y=None, seed=0, threads=1, sweeps=None, step=None):
        ''' Law-of-large-numbers experiment for the maximum of Q_N

        Parameters
        ----------
        model : EquilibriumModel

        N : int or sequence of int
            One or several matrix sizes

        n_samples : int
            Spectra per size

        y : float, optional
            Off-axis shift; adds the m_star_reg column

        seed : int, optional

        threads : int, optional

        Attributes
        ----------
        df : pandas.DataFrame
            N, seed_index, m_star, m_star_over_logN, m_star_centered_2nd_order
            (and m_star_reg, ordering_ok when y is given)
        '''
        sizes = [N] if np.isscalar(N) else list(N)
        self.model = model
        self.seed = seed
        self.y = y
        rows = []
        for n in sizes:
            logger.info('max experiment: N=%d, %d samples', n, n_samples)
            for rec in max_experiment(model, n, n_samples, y, seed, threads, sweeps, step):
                row = {'N': rec.N, 'seed_index': rec.seed, 'm_star': rec.m_star,
                       'm_star_over_logN': rec.m_star / np.log(rec.N),
                       'm_star_centered_2nd_order': rec.m_star - second_order_center(rec.N)}
                if y is not None:
                    row['m_star_reg'] = rec.m_star_reg
                    row['ordering_ok'] = rec.ordering_ok
                rows.append(row)
        self.records = rows
        self.df = pd.DataFrame(rows)

    def head(self, n=5):
        ''' Largest maxima '''
        return self.df.sort_values('m_star', ascending=False).head(n)

    def tail(self, n=5):
        ''' Smallest maxima '''
        return self.df.sort_values('m_star', ascending=False).tail(n)

    def summary(self):
        ''' Median and quartiles per N of m_star / log N and the recentered maximum '''
        grouped = self.df.groupby('N')
        out = pd.DataFrame({
            'samples': grouped.size(),
            'q25_over_logN': grouped['m_star_over_logN'].quantile(0.25),
            'median_over_logN': grouped['m_star_over_logN'].median(),
            'q75_over_logN': grouped['m_star_over_logN'].quantile(0.75),
            'q25_centered': grouped['m_star_centered_2nd_order'].quantile(0.25),
            'median_centered': grouped['m_star_centered_2nd_order'].median(),
            'q75_centered': grouped['m_star_centered_2nd_order'].quantile(0.75)})
        out.index.name = 'N'
        return out

    def summary_json(self):
        ''' Summary record for the JSON output '''
        return {'model': self.model.name, 'seed': self.seed, 'y': self.y,
                'by_N': self.summary().reset_index().to_dict(orient='records')}

    def upper_tail_fraction(self, c=3.0):
        ''' Fraction per N of samples with m_star > log N + c log log N '''
        thresh = np.log(self.df['N']) + c * np.log(np.log(self.df['N']))
        return (self.df['m_star'] > thresh).groupby(self.df['N']).mean()

    def report(self):
        s = self.summary()
        lines = ['%6s %8s %10s %10s %10s %10s' % ('N', 'samples', 'median/lN', 'q25/lN',
                                                 'q75/lN', 'median-c2')]
        for n, r in s.iterrows():
            lines.append('%6d %8d %10.4f %10.4f %10.4f %10.4f' % (
                n, r['samples'], r['median_over_logN'], r['q25_over_logN'],
                r['q75_over_logN'], r['median_centered']))
        return '\n'.join(lines)


def _centering_task(task):
    model, N, seed, i, sweeps, step = task
    spectrum = sample_spectrum(model, N, seed, sub=(i,), sweeps=sweeps, step=step)
    return log_abs_sum(spectrum.eigenvalues, cheb_grid(N))


def empirical_centering(model, N, n_samples, seed=0, threads=1, sweeps=None, step=None):
    ''' Monte Carlo E sum log|x_k - lambda| minus the equilibrium centering

    Returns
    -------
    pandas.DataFrame
        x, offset, stderr over cheb_grid(N)
    '''
    x = cheb_grid(N)
    tasks = [(model, N, seed, i, sweeps, step) for i in range(n_samples)]
    sums = np.array(map_tasks(_centering_task, tasks, threads))
    offset = sums.mean(axis=0) - centering(model, N, x)
    stderr = sums.std(axis=0, ddof=1) / np.sqrt(n_samples) if n_samples > 1 else np.full(x.size, np.nan)
    return pd.DataFrame({'x': x, 'offset': offset, 'stderr': stderr})
