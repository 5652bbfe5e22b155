"""Equilibrium models for the weight e^{-N V} and eigenvalue samplers.

All models are normalized so the equilibrium support is [-1, 1]. The GUE
model is V(x) = 2x^2 with the semicircle density (2/pi) sqrt(1 - u^2).
"""
import logging
from functools import partial

import numpy as np
from scipy import integrate
from scipy.linalg import eigh_tridiagonal

from .errors import ConvergenceError, DomainError
from .rng import substream

logger = logging.getLogger(__name__)

QUAD_OPTS = dict(limit=400, epsabs=1e-14, epsrel=1e-13)
MAX_RESAMPLE = 5


def _sqrt_cut(q):
    ''' sqrt(q^2 - 1) with the cut on [-1, 1] and sqrt ~ q at infinity '''
    q = np.asarray(q, dtype=complex)
    return np.sqrt(q - 1.0) * np.sqrt(q + 1.0)


def _gue_g(q):
    q = np.asarray(q, dtype=complex)
    phi = q + _sqrt_cut(q)
    # q^2 - q sqrt(q^2 - 1) = q / phi
    return q / phi + np.log(phi) - 0.5 - np.log(2.0)


def _gue_stieltjes(q):
    q = np.asarray(q, dtype=complex)
    return 2.0 / (q + _sqrt_cut(q))


def _gue_log_potential(q):
    return np.real(_gue_g(np.asarray(q, dtype=complex)))


class EquilibriumModel:
    def __init__(self, name, V, rho, support=((-1.0, 1.0),), dV=None,
                 g_exact=None, stieltjes_exact=None, log_potential_exact=None,
                 n_profile=101):
        ''' One-cut equilibrium model for the varying weight e^{-N V}

        Parameters
        ----------
        name : str
            Identifier written to output files

        V : callable
            Potential, vectorized over real arrays

        rho : callable
            Equilibrium density, vectorized, zero off the support

        support : sequence of (float, float), optional
            Support intervals; only the first one is used by the one-cut
            quadrature

        dV : callable, optional
            Derivative of V

        g_exact, stieltjes_exact, log_potential_exact : callable, optional
            Closed forms used as the default evaluation route

        n_profile : int, optional
            Size of the interior grid on which ell_V is computed

        Attributes
        ----------
        ell_v : float
            Mean of 2 int log|x - u| rho(du) - V(x) over the interior grid

        ell_v_std : float
            Spread of the same profile (zero for an exact equilibrium)

        rho_max : float
            sup of the density
        '''
        self.name = name
        self.V = V
        self.dV = dV
        self.rho = rho
        self.support = [tuple(map(float, iv)) for iv in support]
        self._g_exact = g_exact
        self._stieltjes_exact = stieltjes_exact
        self._log_potential_exact = log_potential_exact
        a, b = self.support[0]
        self.left, self.right = a, b
        grid = np.linspace(a, b, 2001)
        self.rho_max = float(np.max(rho(grid)))
        self.profile_grid = np.linspace(a, b, n_profile + 2)[1:-1]
        profile = self.ell_v_profile(self.profile_grid)
        self.ell_v = float(np.mean(profile))
        self.ell_v_std = float(np.std(profile))
        logger.debug('model %s: ell_V = %.15g (std %.2e)', name, self.ell_v, self.ell_v_std)

    def __repr__(self):
        return 'EquilibriumModel(%r)' % self.name

    @property
    def is_gue(self):
        return self.name == 'gue'

    @property
    def edges(self):
        return [e for iv in self.support for e in iv]

    # quadrature over the support with u = c + s cos(phi)
    def _integrate(self, f, breakpoint=None):
        a, b = self.support[0]
        c, s = 0.5 * (a + b), 0.5 * (b - a)

        def integrand(phi):
            u = c + s * np.cos(phi)
            return f(u) * self.rho(u) * s * np.sin(phi)

        points = None
        if breakpoint is not None and a < breakpoint < b:
            points = [float(np.arccos((breakpoint - c) / s))]
        val, _ = integrate.quad(integrand, 0.0, np.pi, points=points, **QUAD_OPTS)
        return val

    def _integrate_complex(self, f, breakpoint=None):
        re = self._integrate(lambda u: np.real(f(u)), breakpoint)
        im = self._integrate(lambda u: np.imag(f(u)), breakpoint)
        return re + 1j * im

    def mass(self):
        return self._integrate(lambda u: np.ones_like(u))

    def moment(self, k):
        return self._integrate(lambda u: u ** k)

    def log_potential_quad(self, q):
        q = np.asarray(q, dtype=complex)
        out = np.empty(q.shape)
        for idx, qq in np.ndenumerate(q):
            bp = qq.real if abs(qq.imag) < 1e-3 else None
            out[idx] = self._integrate(lambda u: np.log(np.abs(qq - u)), bp)
        return out if out.ndim else float(out)

    def log_potential(self, q, method='auto'):
        ''' int log|q - u| rho(du); Re g(q) off the axis, -g_tilde(x) on it '''
        if method == 'auto' and self._log_potential_exact is not None:
            return self._log_potential_exact(q)
        return self.log_potential_quad(q)

    def g_tilde(self, x, method='auto'):
        ''' Log-potential x -> -int log|x - u| rho(du) on the real line '''
        return -self.log_potential(np.asarray(x, dtype=float), method)

    def ell_v_profile(self, x, method='quad'):
        ''' 2 int log|x - u| rho(du) - V(x), constant on the support '''
        x = np.asarray(x, dtype=float)
        return 2.0 * self.log_potential(x, method) - self.V(x)

    def _check_off_cut(self, q):
        q = np.asarray(q, dtype=complex)
        if np.any((q.imag == 0) & (q.real <= self.right)):
            raise DomainError('g is evaluated on its branch cut (-inf, %g]' % self.right)

    def g(self, q, method='auto'):
        ''' g(q) = int log(q - u) rho(du), principal branch, cut (-inf, right edge] '''
        self._check_off_cut(q)
        if method == 'auto' and self._g_exact is not None:
            return self._g_exact(q)
        q = np.asarray(q, dtype=complex)
        out = np.empty(q.shape, dtype=complex)
        for idx, qq in np.ndenumerate(q):
            bp = qq.real if abs(qq.imag) < 1e-3 else None
            out[idx] = self._integrate_complex(lambda u: np.log(qq - u), bp)
        return out if out.ndim else complex(out)

    def stieltjes(self, q, method='auto'):
        ''' int rho(du) / (q - u) '''
        q = np.asarray(q, dtype=complex)
        if np.any((q.imag == 0) & (q.real >= self.left) & (q.real <= self.right)):
            raise DomainError('Stieltjes transform evaluated on the support')
        if method == 'auto' and self._stieltjes_exact is not None:
            return self._stieltjes_exact(q)
        out = np.empty(q.shape, dtype=complex)
        for idx, qq in np.ndenumerate(q):
            out[idx] = self._integrate_complex(lambda u: 1.0 / (qq - u))
        return out if out.ndim else complex(out)

    def quantiles(self, n):
        ''' Midpoint quantiles of rho, used as a deterministic start state '''
        a, b = self.support[0]
        grid = np.linspace(a, b, 20001)
        dens = self.rho(grid)
        cdf = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(grid))])
        cdf /= cdf[-1]
        return np.interp((np.arange(n) + 0.5) / n, cdf, grid)


def _gue_V(x):
    return 2.0 * np.asarray(x) ** 2


def _gue_dV(x):
    return 4.0 * np.asarray(x)


def _gue_rho(u):
    u = np.asarray(u)
    return np.where(np.abs(u) < 1.0, 2.0 / np.pi * np.sqrt(np.clip(1.0 - u ** 2, 0.0, None)), 0.0)


def gue_model():
    ''' V(x) = 2x^2 with the semicircle law on [-1, 1] '''
    return EquilibriumModel('gue', V=_gue_V, dV=_gue_dV, rho=_gue_rho,
                            g_exact=_gue_g, stieltjes_exact=_gue_stieltjes,
                            log_potential_exact=_gue_log_potential)


def _quartic_V(x, t4):
    x = np.asarray(x)
    return (2.0 - 1.5 * t4) * x ** 2 + t4 * x ** 4


def _quartic_dV(x, t4):
    x = np.asarray(x)
    return 2.0 * (2.0 - 1.5 * t4) * x + 4.0 * t4 * x ** 3


def _quartic_rho(u, t4):
    u = np.asarray(u)
    inside = np.clip(1.0 - u ** 2, 0.0, None)
    return np.where(np.abs(u) < 1.0,
                    (2.0 * t4 * u ** 2 + 2.0 - 0.5 * t4) * np.sqrt(inside) / np.pi, 0.0)


def _quartic_stieltjes(q, t4):
    q = np.asarray(q, dtype=complex)
    dv = _quartic_dV(q, t4)
    h = (4.0 * t4 * q ** 2 + 4.0 - t4) * _sqrt_cut(q)
    direct = 0.5 * (dv - h)
    # dV^2 - H^2 (q^2 - 1) = 16 t4 q^2 + (4 - t4)^2
    with np.errstate(divide="ignore", invalid="ignore"):
        rational = 0.5 * (16.0 * t4 * q ** 2 + (4.0 - t4) ** 2) / (dv + h)
    return np.where(np.abs(q) < 2.0, direct, rational)


def quartic_model(t4):
    ''' One-cut quartic potential with support [-1, 1]

    V(x) = (2 - 3 t4/2) x^2 + t4 x^4, density
    (1/pi)(2 t4 u^2 + 2 - t4/2) sqrt(1 - u^2). ``t4 = 0`` is the GUE.

    Parameters
    ----------
    t4 : float
        Quartic coefficient in [0, 4)
    '''
    t4 = float(t4)
    if not 0.0 <= t4 < 4.0:
        raise DomainError('quartic coefficient must lie in [0, 4)')
    return EquilibriumModel('quartic(%.17g)' % t4, V=partial(_quartic_V, t4=t4),
                            dV=partial(_quartic_dV, t4=t4), rho=partial(_quartic_rho, t4=t4),
                            stieltjes_exact=partial(_quartic_stieltjes, t4=t4))


def get_model(name, t4=0.0):
    ''' Model by identifier: 'gue', 'quartic' (with t4) or 'quartic(t4)' '''
    name = str(name).strip().lower()
    if name == 'gue':
        return gue_model()
    if name == 'quartic':
        return quartic_model(t4)
    if name.startswith('quartic(') and name.endswith(')'):
        try:
            return quartic_model(float(name[8:-1]))
        except ValueError:
            pass
    raise DomainError('unknown model %r' % name)


def stieltjes(model, q):
    ''' int rho(du) / (q - u) for q off the support '''
    return model.stieltjes(q)


def g_eval(model, q):
    ''' g(q) = int log(q - u) rho(du) off (-inf, right edge] '''
    return model.g(q)


class Spectrum:
    def __init__(self, eigenvalues, model, seed, sampler, diagnostics=None):
        ''' Sorted eigenvalues of one sampled matrix

        Attributes
        ----------
        N : int
        eigenvalues : ndarray, ascending
        model : str
        seed : int
        sampler : {'tridiagonal', 'mcmc'}
        diagnostics : dict
        '''
        self.eigenvalues = np.sort(np.asarray(eigenvalues, dtype=float))
        self.N = self.eigenvalues.size
        self.model = model
        self.seed = int(seed)
        self.sampler = sampler
        self.diagnostics = diagnostics or {}

    def __eq__(self, other):
        return (isinstance(other, Spectrum) and self.model == other.model
                and self.seed == other.seed and self.sampler == other.sampler
                and np.array_equal(self.eigenvalues, other.eigenvalues))

    def __repr__(self):
        return 'Spectrum(N=%d, model=%r, seed=%d, sampler=%r)' % (
            self.N, self.model, self.seed, self.sampler)

    def metadata(self):
        return {'N': self.N, 'model': self.model, 'seed': self.seed,
                'sampler': self.sampler}

    def moments(self, k_max=4):
        ''' Empirical moments (1/N) sum lambda^k for k = 1..k_max '''
        return np.array([np.mean(self.eigenvalues ** k) for k in range(1, k_max + 1)])


def _hermite_tridiagonal(N, rng):
    diag = rng.standard_normal(N)
    off = np.sqrt(rng.chisquare(2.0 * np.arange(N - 1, 0, -1))) / np.sqrt(2.0)
    return diag, off


def sample_spectrum_gue(N, seed, sub=()):
    ''' GUE spectrum from the beta = 2 tridiagonal Hermite model

    Parameters
    ----------
    N : int
        Matrix size

    seed : int
        Master seed

    sub : tuple of int, optional
        Task coordinates appended to the seed (sample index in experiments)

    Returns
    -------
    Spectrum
        Eigenvalues with density proportional to Delta(lambda)^2 e^{-2N sum lambda^2}
    '''
    if N < 1:
        raise DomainError('N must be positive')
    for attempt in range(MAX_RESAMPLE):
        rng = substream(seed, *sub, attempt) if attempt else substream(seed, *sub)
        diag, off = _hermite_tridiagonal(N, rng)
        if N == 1:
            mu = diag
            break
        try:
            mu = eigh_tridiagonal(diag, off, eigvals_only=True)
            break
        except np.linalg.LinAlgError:
            logger.warning('tridiagonal eigensolver failed (N=%d, seed=%d, attempt %d); resampling',
                           N, seed, attempt)
    else:
        raise ConvergenceError('eigensolver failed %d times' % MAX_RESAMPLE)
    return Spectrum(mu / (2.0 * np.sqrt(N)), 'gue', seed, 'tridiagonal',
                    {'attempts': attempt + 1})


def sample_gue_batch(N, n, rng, chunk=100000):
    ''' n GUE spectra at small N from dense Hermitian matrices

    Returns an (n, N) array of eigenvalues on the [-1, 1] scale.
    '''
    out = np.empty((n, N))
    for start in range(0, n, chunk):
        m = min(chunk, n - start)
        a = rng.standard_normal((m, N, N)) + 1j * rng.standard_normal((m, N, N))
        h = 0.5 * (a + np.conj(np.swapaxes(a, 1, 2)))
        out[start:start + m] = np.linalg.eigvalsh(h)
    return out / (2.0 * np.sqrt(N))


def _log_gas_energy(x, model, N):
    diff = np.abs(x[:, :, None] - x[:, None, :])
    iu = np.triu_indices(x.shape[1], k=1)
    return -2.0 * np.log(diff[:, iu[0], iu[1]]).sum(axis=1) + N * model.V(x).sum(axis=1)


def _metropolis(model, N, sweeps, step, rng, n_chains):
    x = np.tile(model.quantiles(N), (n_chains, 1))
    trace = np.empty(sweeps)
    accepted = 0
    for sweep in range(sweeps):
        for i in range(N):
            current = x[:, i]
            prop = current + step * rng.standard_normal(n_chains)
            others = np.delete(x, i, axis=1)
            with np.errstate(divide='ignore', invalid='ignore'):
                dlog = (2.0 * (np.log(np.abs(prop[:, None] - others)).sum(axis=1)
                               - np.log(np.abs(current[:, None] - others)).sum(axis=1))
                        - N * (model.V(prop) - model.V(current)))
            dlog = np.where(np.isnan(dlog), -np.inf, dlog)
            accept = np.log(rng.random(n_chains)) < dlog
            x[accept, i] = prop[accept]
            accepted += int(accept.sum())
        trace[sweep] = float(np.mean(_log_gas_energy(x, model, N)))
    rate = accepted / float(sweeps * N * n_chains)
    flagged = not 0.1 <= rate <= 0.9
    if flagged:
        logger.warning('Metropolis acceptance rate %.3f outside [0.1, 0.9] (N=%d, step=%g)',
                       rate, N, step)
    return x, {'acceptance_rate': rate, 'energy_trace': trace, 'flagged': flagged}


def sample_spectra_mcmc(model, N, sweeps, step, seed, n_chains, sub=()):
    ''' n_chains independent Metropolis chains run side by side

    Returns a list of Spectrum sharing one diagnostics record.
    '''
    if sweeps < 1:
        raise DomainError('sweeps must be at least 1')
    if step < 0:
        raise DomainError('step must be nonnegative')
    x, diag = _metropolis(model, N, sweeps, step, substream(seed, *sub), n_chains)
    return [Spectrum(row, model.name, seed, 'mcmc', diag) for row in x]


def sample_spectrum_mcmc(model, N, sweeps, step, seed, sub=()):
    ''' Log-gas spectrum by single-coordinate random-walk Metropolis

    Parameters
    ----------
    model : EquilibriumModel

    N : int
        Number of particles

    sweeps : int
        Full passes over the coordinates

    step : float
        Proposal standard deviation

    seed : int

    Returns
    -------
    Spectrum
        Final state; ``diagnostics`` holds acceptance_rate, energy_trace
        and flagged
    '''
    return sample_spectra_mcmc(model, N, sweeps, step, seed, 1, sub)[0]


def sample_spectrum(model, N, seed, sub=(), sweeps=None, step=None):
    ''' Exact tridiagonal sampler for the GUE, Metropolis otherwise '''
    if model.is_gue:
        return sample_spectrum_gue(N, seed, sub)
    sweeps = sweeps or 2000
    step = step or 1.0 / N
    return sample_spectrum_mcmc(model, N, sweeps, step, seed, sub)
