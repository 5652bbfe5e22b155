"""The Gaussian comparison fields G and T on the unit disk.

G has covariance -1/2 log|1 - z conj(w)|; T = (G(z) + G(conj z))/sqrt(2) adds
the reflected term. Biases are finite signed point sets
B(F) = sum 2F(z) - sum 2F(w) and their exponential moments are computed in
closed form.
"""
import logging
from collections import namedtuple

import numpy as np
import pandas as pd

from .errors import DegenerateConfigurationError, DomainError, FactorizationError
from .hyperbolic import check_disk, hyp_dist
from .rng import substream

logger = logging.getLogger(__name__)

BLOCK_ROWS = 1024
TINY = 1e-300

BrwRecord = namedtuple('BrwRecord', ['c_b', 'c_c', 'k_offset_range'])


def _log_abs_one_minus(z, w):
    return np.log(np.abs(1.0 - z * np.conj(w)))


def cov_g(z, w):
    ''' Covariance of G: -1/2 log|1 - z conj(w)| '''
    check_disk(z, w)
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    return -0.5 * _log_abs_one_minus(z, w)


def _logcosh(x):
    x = np.abs(x)
    return x + np.log1p(np.exp(-2.0 * x)) - np.log(2.0)


def cov_g_cosh(y, z):
    ''' Covariance of G written through hyperbolic distances

    1/2 log(cosh(d(0,y)/2) cosh(d(0,z)/2) / cosh(d(y,z)/2))
    '''
    return 0.5 * (_logcosh(0.5 * hyp_dist(0.0, y)) + _logcosh(0.5 * hyp_dist(0.0, z))
                  - _logcosh(0.5 * hyp_dist(y, z)))


def cov_t(z, w):
    ''' Covariance of T: -1/2 log|1 - z w| - 1/2 log|1 - z conj(w)| '''
    check_disk(z, w)
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    return -0.5 * np.log(np.abs(1.0 - z * w)) - 0.5 * _log_abs_one_minus(z, w)


class GaussKernel:
    def __init__(self, kind='G'):
        ''' Covariance kernel of one of the two comparison fields

        Parameters
        ----------
        kind : {'G', 'T'}
            Field whose covariance is used
        '''
        kind = str(kind).upper()
        if kind not in ('G', 'T'):
            raise DomainError('unknown kernel kind %r' % kind)
        self.kind = kind
        self.covariance = cov_g if kind == 'G' else cov_t

    def __call__(self, z, w):
        return self.covariance(z, w)

    def matrix(self, points):
        ''' Covariance matrix on a finite point set '''
        p = np.asarray(points, dtype=complex).ravel()
        c = self.covariance(p[:, None], p[None, :])
        return 0.5 * (c + c.T)

    def __repr__(self):
        return 'GaussKernel(%r)' % self.kind


class BiasSpec:
    def __init__(self, plus_points=(), minus_points=()):
        ''' Signed point set defining B(F) = sum 2F(z) - sum 2F(w)

        Parameters
        ----------
        plus_points : sequence of complex
            The set Z (weight +2)

        minus_points : sequence of complex
            The set W (weight -2)
        '''
        self.plus_points = np.asarray(plus_points, dtype=complex).ravel()
        self.minus_points = np.asarray(minus_points, dtype=complex).ravel()
        check_disk(self.plus_points, self.minus_points)
        if np.intersect1d(self.plus_points, self.minus_points).size:
            raise DegenerateConfigurationError('plus and minus points overlap')

    @property
    def points(self):
        return np.concatenate([self.plus_points, self.minus_points])

    @property
    def weights(self):
        return np.concatenate([np.full(self.plus_points.size, 2.0),
                               np.full(self.minus_points.size, -2.0)])

    def __len__(self):
        return self.plus_points.size + self.minus_points.size

    def conj(self):
        return BiasSpec(np.conj(self.plus_points), np.conj(self.minus_points))

    def rotate(self, phase):
        ''' Bias with every point multiplied by the unimodular ``phase`` '''
        return BiasSpec(self.plus_points * phase, self.minus_points * phase)

    def evaluate(self, values):
        ''' B(F) for field values given at ``self.points`` (last axis) '''
        return np.asarray(values) @ self.weights

    def __repr__(self):
        return 'BiasSpec(plus=%s, minus=%s)' % (list(self.plus_points),
                                                 list(self.minus_points))


def _check_no_repeats(points):
    if np.unique(points).size != points.size:
        raise DegenerateConfigurationError('repeated point in bias')


def log_exp_moment_g(bias):
    ''' log E[e^{B(G)}] by the product formula '''
    z = bias.plus_points
    w = bias.minus_points
    _check_no_repeats(z)
    _check_no_repeats(w)
    if not len(bias):
        return 0.0
    zw = np.abs(1.0 - z[:, None] * np.conj(w[None, :]))
    zz = np.abs(1.0 - z[:, None] * np.conj(z[None, :]))
    ww = np.abs(1.0 - w[:, None] * np.conj(w[None, :]))
    for block in (zw, zz, ww):
        if block.size and block.min() < TINY:
            raise DegenerateConfigurationError('|1 - z conj(w)| underflows')
    return (2.0 * np.log(zw).sum() - np.log(zz).sum() - np.log(ww).sum())


def exp_moment_g(bias):
    ''' E[e^{B(G)}] = prod |1 - z conj(w)|^2 / (prod |1 - z conj(z')| prod |1 - w conj(w')|)

    Parameters
    ----------
    bias : BiasSpec

    Returns
    -------
    float
        Exponential moment of the bias under the field G
    '''
    return float(np.exp(log_exp_moment_g(bias)))


def bias_variance(points, weights, kernel):
    ''' Var(sum weights * F(points)) under ``kernel`` (repeats allowed) '''
    weights = np.asarray(weights, dtype=float)
    if not weights.size:
        return 0.0
    return float(weights @ kernel.matrix(points) @ weights)


def exp_moment(bias, kernel):
    ''' E[e^{B(F)}] = exp(Var(B(F))/2) through the covariance quadratic form '''
    return float(np.exp(0.5 * bias_variance(bias.points, bias.weights, kernel)))


def biased_mean(bias, kernel, zeta):
    ''' Mean of F(zeta) under the law tilted by e^{B(F)}

    Returns sum 2 cov(zeta, z) - sum 2 cov(zeta, w), vectorized over zeta.
    '''
    zeta = np.asarray(zeta, dtype=complex)
    if not len(bias):
        return np.zeros(zeta.shape)
    cov = kernel(zeta[..., None], bias.points)
    return cov @ bias.weights


class CovFactor:
    def __init__(self, cov, labels=None):
        ''' Square-root factor of a covariance matrix

        Parameters
        ----------
        cov : ndarray
            Symmetric covariance matrix

        labels : sequence, optional
            Row/column labels for the DataFrame views

        Attributes
        ----------
        factor : ndarray
            L with L L^T = cov (up to clipped eigenvalues)

        method : {'cholesky', 'eigen'}
            Factorization used

        cov_df : pandas DataFrame
            Covariance matrix

        eig_values : ndarray or None
            Eigenvalues, when the eigen path was taken
        '''
        cov = 0.5 * (np.asarray(cov, dtype=float) + np.asarray(cov, dtype=float).T)
        n = cov.shape[0]
        self.eig_values = None
        try:
            self.factor = np.linalg.cholesky(cov)
            self.method = 'cholesky'
        except np.linalg.LinAlgError:
            eig_values, eig_vectors = np.linalg.eigh(cov)
            floor = -1e-8 * max(np.trace(cov), TINY) / n
            if eig_values.min() < floor:
                raise FactorizationError(
                    'covariance eigenvalue %.3e below %.3e; points too dense'
                    % (eig_values.min(), floor))
            clipped = np.clip(eig_values, 0.0, None)
            logger.info('Cholesky failed on %d points, clipped %d eigenvalues',
                        n, int(np.sum(eig_values < 0)))
            self.factor = eig_vectors * np.sqrt(clipped)
            self.method = 'eigen'
            self.eig_values = eig_values
        self.cov_df = pd.DataFrame(cov, index=labels, columns=labels)

    def correlation(self):
        ''' Correlation matrix as a DataFrame '''
        cov = self.cov_df.values
        d = np.sqrt(np.diag(cov))
        with np.errstate(invalid='ignore', divide='ignore'):
            cor = cov / np.multiply.outer(d, d)
        return pd.DataFrame(cor, index=self.cov_df.index, columns=self.cov_df.columns)


class FieldSample:
    def __init__(self, points, values, seed, factorization, kind='G'):
        ''' Independent realizations of a Gaussian field on a point set

        Attributes
        ----------
        points : ndarray of complex
        values : ndarray, shape (n_samples, n_points)
        seed : int
        factorization : {'cholesky', 'eigen'}
        kind : {'G', 'T'}
        '''
        self.points = points
        self.values = values
        self.seed = seed
        self.factorization = factorization
        self.kind = kind
        self._index = {complex(p): i for i, p in enumerate(points)}

    @property
    def n_samples(self):
        return self.values.shape[0]

    def column(self, z):
        ''' Values at the point z across all samples '''
        try:
            return self.values[:, self._index[complex(z)]]
        except KeyError:
            raise DomainError('no sampled value at %r' % (z,))

    def row_field(self, i):
        ''' Sample ``i`` as a callable F(z) on the sampled points '''
        row = self.values[i]

        def field(z):
            try:
                return row[self._index[complex(z)]]
            except KeyError:
                raise DomainError('no sampled value at %r' % (z,))
        return field

    def empirical_covariance(self):
        ''' Mean of outer products (the field is centered) '''
        return self.values.T @ self.values / self.n_samples

    def covariance_stderr(self, kernel):
        ''' Standard errors of the empirical covariance entries '''
        c = kernel.matrix(self.points)
        d = np.diag(c)
        return np.sqrt((np.multiply.outer(d, d) + c ** 2) / self.n_samples)

    def to_frame(self):
        ''' Long format: sample_index, point_index, re_z, im_z, value '''
        n_samples, n_points = self.values.shape
        return pd.DataFrame({
            'sample_index': np.repeat(np.arange(n_samples), n_points),
            'point_index': np.tile(np.arange(n_points), n_samples),
            're_z': np.tile(self.points.real, n_samples),
            'im_z': np.tile(self.points.imag, n_samples),
            'value': self.values.ravel()})


def sample_gauss(points, kernel, n_samples, seed):
    ''' Sample a Gaussian field at finitely many points

    Parameters
    ----------
    points : sequence of complex
        Pairwise distinct points of the open disk

    kernel : GaussKernel
        Covariance to realize

    n_samples : int
        Number of independent rows

    seed : int
        Master seed; row block b is drawn from substream(seed, b)

    Returns
    -------
    FieldSample
    '''
    points = np.asarray(points, dtype=complex).ravel()
    if n_samples < 1:
        raise DomainError('n_samples must be positive')
    if np.unique(points).size != points.size:
        raise DegenerateConfigurationError('sample points must be distinct')
    factor = CovFactor(kernel.matrix(points))
    values = np.empty((n_samples, points.size))
    for block, start in enumerate(range(0, n_samples, BLOCK_ROWS)):
        stop = min(start + BLOCK_ROWS, n_samples)
        normals = substream(seed, block).standard_normal((stop - start, points.size))
        values[start:stop] = normals @ factor.factor.T
    return FieldSample(points, values, seed, factor.method, kernel.kind)


def brw_check(grid, kernel):
    ''' Empirical constants of the branching-random-walk comparison

    Parameters
    ----------
    grid : sequence of complex
        Points of the open disk

    kernel : GaussKernel

    Returns
    -------
    BrwRecord
        c_b : sup Var(F(z) - F(w)) / d_H(z, w)^2 over pairs with 0 < d_H <= 1
        c_c : sup |E[F(y)(F(z) - F(w))]| / d_H(z, w) over the same pairs
        k_offset_range : (min, max) of cov(z, w) - min{-log|sin(dtheta/2)|, h_z, h_w}/2
    '''
    p = np.asarray(grid, dtype=complex).ravel()
    c = kernel.matrix(p)
    d = hyp_dist(p[:, None], p[None, :])
    diag = np.diag(c)
    var = diag[:, None] + diag[None, :] - 2.0 * c
    close = np.triu((d > 0) & (d <= 1.0), k=1)
    if close.any():
        c_b = float(np.max(var[close] / d[close] ** 2))
        c_c = 0.0
        for i in np.flatnonzero(close.any(axis=1)):
            js = np.flatnonzero(close[i])
            inc = np.abs(c[:, [i]] - c[:, js]).max(axis=0) / d[i, js]
            c_c = max(c_c, float(inc.max()))
    else:
        c_b = c_c = np.nan
    depth = hyp_dist(0.0, p)
    theta = np.angle(p)
    iu, ju = np.triu_indices(p.size, k=1)
    with np.errstate(divide='ignore'):
        branch = -np.log(np.abs(np.sin(0.5 * (theta[iu] - theta[ju]))))
    m = np.minimum(np.minimum(branch, depth[iu]), depth[ju])
    offset = c[iu, ju] - 0.5 * m
    if offset.size:
        k_range = (float(offset.min()), float(offset.max()))
    else:
        k_range = (np.nan, np.nan)
    return BrwRecord(c_b, c_c, k_range)


def polar_grid(depths, thetas):
    ''' Points zeta_h e^{i theta} for every depth h and angle theta '''
    depths = np.asarray(depths, dtype=float)
    thetas = np.asarray(thetas, dtype=float)
    return (np.tanh(0.5 * depths)[:, None] * np.exp(1j * thetas)[None, :]).ravel()


class BrwCheck:
    def __init__(self, kernel, max_depth=8, n_thetas=(16, 32, 64)):
        ''' brw_check on successively refined polar grids

        Parameters
        ----------
        kernel : GaussKernel

        max_depth : int, optional
            Depths 0.5, 1, ..., max_depth are used

        n_thetas : sequence of int, optional
            Angular resolutions, one grid each

        Attributes
        ----------
        df : pandas DataFrame
            Columns n_theta, n_points, c_b, c_c, k_lo, k_hi
        '''
        depths = np.arange(1, 2 * max_depth + 1) / 2.0
        rows = []
        for n_theta in n_thetas:
            thetas = np.pi * (2.0 * np.arange(n_theta) / n_theta - 1.0)
            grid = polar_grid(depths, thetas)
            rec = brw_check(grid, kernel)
            logger.debug('brw grid n_theta=%d: %s', n_theta, rec)
            rows.append({'n_theta': n_theta, 'n_points': grid.size,
                         'c_b': rec.c_b, 'c_c': rec.c_c,
                         'k_lo': rec.k_offset_range[0], 'k_hi': rec.k_offset_range[1]})
        self.df = pd.DataFrame(rows, columns=['n_theta', 'n_points', 'c_b', 'c_c',
                                              'k_lo', 'k_hi'])
        self.kernel = kernel

    def summary(self):
        return pd.Series({'kind': self.kernel.kind,
                          'c_b_max': float(self.df['c_b'].max()),
                          'c_b_spread': float(self.df['c_b'].max() - self.df['c_b'].min()),
                          'c_c_max': float(self.df['c_c'].max()),
                          'k_lo': float(self.df['k_lo'].min()),
                          'k_hi': float(self.df['k_hi'].max())})
