"""Poincare disk geometry: metrics, automorphisms, the Joukowsky chart,
ray points, the comparison domain and the branching-distance profile.

Points are plain complex numbers (or numpy arrays of them). Every function
broadcasts over array arguments.
"""
from collections import namedtuple

import numpy as np
import pandas as pd

from .errors import DomainError

BranchProfile = namedtuple('BranchProfile', ['exact', 'approx', 'error'])


def check_disk(*points):
    ''' Raise DomainError unless every point lies in the open unit disk '''
    for z in points:
        if np.any(np.abs(np.asarray(z)) >= 1.0):
            raise DomainError('point outside the open unit disk')


def mobius_to_zero(y, z):
    ''' Disk automorphism T_y(z) = (z - y) / (1 - z conj(y)), taking y to 0 '''
    check_disk(y, z)
    y = np.asarray(y, dtype=complex)
    z = np.asarray(z, dtype=complex)
    return (z - y) / (1.0 - z * np.conj(y))


def pseudo_dist(a, b):
    ''' Pseudohyperbolic distance |a - b| / |1 - a conj(b)| '''
    check_disk(a, b)
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    return np.abs(a - b) / np.abs(1.0 - a * np.conj(b))


def hyp_dist(a, b):
    ''' Hyperbolic distance, normalized so d_H(0, r) = log((1 + r)/(1 - r))

    Parameters
    ----------
    a, b : complex or array_like
        Points of the open unit disk

    Returns
    -------
    float or ndarray
        2 atanh(pseudo_dist(a, b))
    '''
    return 2.0 * np.arctanh(pseudo_dist(a, b))


def joukowsky(z):
    ''' Joukowsky map J(z) = (z + 1/z) / 2

    Maps the punctured disk onto the plane minus [-1, 1]; the unit circle
    collapses onto [-1, 1].
    '''
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise DomainError('Joukowsky map is singular at z = 0')
    return 0.5 * (z + 1.0 / z)


def joukowsky_distance(z, w):
    ''' |J(z) - J(w)| through the product identity |z-w||1-zw| / (2|zw|) '''
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    return np.abs(z - w) * np.abs(1.0 - z * w) / (2.0 * np.abs(z * w))


def ray_point(j):
    ''' Ray point zeta_j = tanh(j/2), at hyperbolic distance j from 0 '''
    j = np.asarray(j, dtype=float)
    if np.any(j < 0):
        raise DomainError('ray index must be nonnegative')
    return np.tanh(0.5 * j)


def branch_profile(h, j, theta):
    ''' Distance between zeta_h and e^{i theta} zeta_j, exact and branching form

    Parameters
    ----------
    h, j : int or array_like
        Depths of the two ray points

    theta : float or array_like
        Angle in [-pi, pi]

    Returns
    -------
    BranchProfile
        exact : distance from the hyperbolic law of cosines
        approx : h + j - 2 min{-log|sin(theta/2)|, h, j}
        error : exact - approx
    '''
    h = np.asarray(h, dtype=float)
    j = np.asarray(j, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if np.any(h < 0) or np.any(j < 0):
        raise DomainError('depths must be nonnegative')
    s2 = np.sin(0.5 * theta) ** 2
    c2 = np.cos(0.5 * theta) ** 2
    # cosh a = cosh(h+j) sin^2(theta/2) + cosh(h-j) cos^2(theta/2)
    cosh_a = np.cosh(h + j) * s2 + np.cosh(h - j) * c2
    exact = np.arccosh(np.maximum(cosh_a, 1.0))
    with np.errstate(divide='ignore'):
        branch = -np.log(np.abs(np.sin(0.5 * theta)))
    approx = h + j - 2.0 * np.minimum(np.minimum(branch, h), j)
    return BranchProfile(exact, approx, exact - approx)


class DomainParams:
    def __init__(self, N, delta, omega=1j):
        ''' Annular wedge D_{N,delta} anchored at the boundary point omega

        Parameters
        ----------
        N : int
            Ensemble size, at least 2

        delta : float
            Exponent in (0, 1/2)

        omega : complex, optional
            Unimodular anchor (default i, i.e. x = 0 under J)
        '''
        if N < 2:
            raise DomainError('N must be at least 2')
        if not 0.0 < delta < 0.5:
            raise DomainError('delta must lie in (0, 1/2)')
        if abs(abs(omega) - 1.0) > 1e-12:
            raise DomainError('omega must lie on the unit circle')
        self.N = N
        self.delta = delta
        self.omega = complex(omega) / abs(omega)
        self.r_min = 1.0 - N ** (-delta)
        self.r_max = 1.0 - N ** (-1.0 + delta)
        self.theta_max = N ** (-delta)

    def polar(self, z):
        ''' Radius and angle of z relative to omega '''
        u = np.asarray(z, dtype=complex) / self.omega
        return np.abs(u), np.angle(u)

    def from_polar(self, r, theta):
        return np.asarray(r) * np.exp(1j * np.asarray(theta)) * self.omega

    def in_domain(self, z):
        r, theta = self.polar(z)
        return ((r >= self.r_min) & (r <= self.r_max)
                & (np.abs(theta) <= self.theta_max))

    def sample(self, n, rng):
        ''' n points uniform in (radius, angle) over the wedge '''
        r = rng.uniform(self.r_min, self.r_max, size=n)
        theta = rng.uniform(-self.theta_max, self.theta_max, size=n)
        return self.from_polar(r, theta)


def in_domain(params, z):
    ''' True iff z lies in D_{N,delta} for the given DomainParams '''
    return params.in_domain(z)


class BranchSweep:
    def __init__(self, h_max=25, n_theta=10000):
        ''' Branching-profile error over all depth pairs and an angle grid

        Parameters
        ----------
        h_max : int, optional
            Largest depth h, j swept (inclusive)

        n_theta : int, optional
            Number of angles, uniform on (0, pi]

        Attributes
        ----------
        df : pandas DataFrame
            One row per depth pair (h, j) with columns max_abs_error,
            theta_at_max and refined. ``refined`` is the largest
            |error| |theta| e^{k} over angles with
            k = min{h, j} > -log|sin(theta/2)| (NaN if no angle qualifies).
        '''
        theta = np.pi * np.arange(1, n_theta + 1) / n_theta
        branch = -np.log(np.abs(np.sin(0.5 * theta)))
        rows = []
        for h in range(h_max + 1):
            for j in range(h_max + 1):
                err = np.abs(branch_profile(h, j, theta).error)
                k = min(h, j)
                regime = k > branch
                if regime.any():
                    refined = float(np.max(err[regime] * theta[regime]) * np.exp(k))
                else:
                    refined = np.nan
                i = int(np.argmax(err))
                rows.append({'h': h, 'j': j, 'max_abs_error': float(err[i]),
                             'theta_at_max': float(theta[i]), 'refined': refined})
        self.df = pd.DataFrame(rows, columns=['h', 'j', 'max_abs_error',
                                              'theta_at_max', 'refined'])
        self.h_max = h_max
        self.n_theta = n_theta

    def error_bound(self):
        ''' sup |exact - approx| over the sweep '''
        return float(self.df['max_abs_error'].max())

    def refined_constant(self):
        ''' Smallest C with |error| <= C e^{-k}/|theta| inside the regime '''
        return float(np.nanmax(self.df['refined'].values))

    def head(self, n):
        ''' Depth pairs with the largest error '''
        return self.df.sort_values('max_abs_error', ascending=False).head(n)

    def summary(self):
        return pd.Series({'h_max': self.h_max, 'n_theta': self.n_theta,
                          'error_bound': self.error_bound(),
                          'refined_constant': self.refined_constant()})
