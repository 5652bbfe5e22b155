"""Mixed exponential moments, bias classes, the matching bound and the
second-moment lower-bound simulator for the Gaussian comparison field.
"""
import itertools
import logging

import numpy as np
import pandas as pd

from .charpoly import exp_moment_field
from .ensemble import gue_model
from .errors import DegenerateConfigurationError, DomainError
from .gaussfield import BiasSpec, GaussKernel, biased_mean, exp_moment_g, sample_gauss
from .hyperbolic import DomainParams, hyp_dist, pseudo_dist, ray_point
from .orthopoly import recurrence_table
from .rng import substream

logger = logging.getLogger(__name__)

MAX_TRIES = 10000


class BiasClassParams:
    def __init__(self, k, ell, epsilon, delta, N):
        ''' Parameters of the separated class S_{k,eps,delta} and its paired extension

        Parameters
        ----------
        k : int
            Points per sign in the separated bias

        ell : int
            Number of extra (z, w) pairs

        epsilon : float
            Minimal hyperbolic separation

        delta : float
            Domain exponent in (0, 1/2)

        N : int
            Ensemble size fixing D_{N,delta}
        '''
        if epsilon <= 0:
            raise DomainError('epsilon must be positive')
        if k < 0 or ell < 0:
            raise DomainError('k and ell must be nonnegative')
        self.k = int(k)
        self.ell = int(ell)
        self.epsilon = float(epsilon)
        self.delta = float(delta)
        self.N = int(N)
        self.domain = DomainParams(N, delta)

    def __repr__(self):
        return 'BiasClassParams(k=%d, ell=%d, epsilon=%g, delta=%g, N=%d)' % (
            self.k, self.ell, self.epsilon, self.delta, self.N)


def _min_separation(points, metric=hyp_dist):
    points = np.asarray(points, dtype=complex)
    if points.size < 2:
        return np.inf
    d = metric(points[:, None], points[None, :])
    iu = np.triu_indices(points.size, k=1)
    return float(np.min(d[iu]))


def validate_separated_bias(bias, params):
    ''' Membership of the bias in S_{k,eps,delta}

    All points in D_{N,delta}, |Z| = |W| = k, Z and W disjoint, and pairwise
    hyperbolic separation at least epsilon.
    '''
    z, w = bias.plus_points, bias.minus_points
    if z.size != params.k or w.size != params.k:
        return False
    pts = bias.points
    if not pts.size:
        return True
    if np.unique(pts).size != pts.size:
        return False
    if not np.all(params.domain.in_domain(pts)):
        return False
    return _min_separation(pts) >= params.epsilon


def validate_paired_bias(base, extra_pairs, params=None):
    ''' Pairing condition for extra (z, w) pairs added to a base bias

    For each listed pair, d_H(z, w) must not exceed the distance from z to
    any other point of Z, nor the distance from w to any other point of W,
    where Z and W collect the base and the extra points. Extra points must
    also be disjoint from each other and from the base; with ``params``
    they must lie in D_{N,delta}.
    '''
    if not extra_pairs:
        return True
    ez = np.array([complex(z) for z, _ in extra_pairs])
    ew = np.array([complex(w) for _, w in extra_pairs])
    Z = np.concatenate([ez, base.plus_points])
    W = np.concatenate([ew, base.minus_points])
    everything = np.concatenate([Z, W])
    if np.unique(everything).size != everything.size:
        return False
    if params is not None and not np.all(params.domain.in_domain(np.concatenate([ez, ew]))):
        return False
    for j in range(ez.size):
        gap = hyp_dist(ez[j], ew[j])
        others_z = np.delete(Z, j)
        others_w = np.delete(W, j)
        competitor = np.inf
        if others_z.size:
            competitor = min(competitor, float(np.min(hyp_dist(ez[j], others_z))))
        if others_w.size:
            competitor = min(competitor, float(np.min(hyp_dist(ew[j], others_w))))
        if gap > competitor:
            return False
    return True


def random_separated_bias(params, rng):
    ''' A bias in S_{k,eps,delta} with points drawn uniformly over the wedge '''
    pts = []
    tries = 0
    while len(pts) < 2 * params.k:
        tries += 1
        if tries > MAX_TRIES:
            raise DomainError('could not place %d points with separation %g in D_{N,delta}'
                              % (2 * params.k, params.epsilon))
        cand = complex(params.domain.sample(1, rng)[0])
        if all(hyp_dist(cand, p) >= params.epsilon for p in pts):
            pts.append(cand)
    return BiasSpec(pts[:params.k], pts[params.k:])


def mem_ratio(table, model, bias):
    ''' E[e^{B(Z_N)}] / E[e^{B(G)}] '''
    if not len(bias):
        return 1.0
    return exp_moment_field(table, model, bias) / exp_moment_g(bias)


def singleton_pair_suite(N, delta, n_translates=16):
    ''' Singleton biases Z = {i zeta_d}, W = {i zeta_d e^{i theta}} and rotations

    d = round(log N / 2) and theta = 1 - zeta_d keep both points in
    D_{N,delta} at hyperbolic distance of order one. The translates rotate
    the pair inside the wedge.

    Returns
    -------
    list of (str, BiasSpec)
    '''
    domain = DomainParams(N, delta)
    d = int(round(0.5 * np.log(N)))
    zeta = float(ray_point(d))
    theta = 1.0 - zeta
    if theta > domain.theta_max:
        raise DomainError('singleton pair does not fit in D_{N,delta} at N = %d' % N)
    z, w = 1j * zeta, 1j * zeta * np.exp(1j * theta)
    suite = [('singleton', BiasSpec([z], [w]))]
    for j, phi in enumerate(np.linspace(-0.5 * domain.theta_max,
                                        0.5 * domain.theta_max - theta, n_translates)):
        rot = np.exp(1j * phi)
        suite.append(('translate_%02d' % j, BiasSpec([z * rot], [w * rot])))
    return suite


class MemVerify:
    def __init__(self, Ns=(64, 128, 256, 512), delta=0.2, n_translates=16, model=None):
        ''' mem_ratio over the singleton suite for several N

        Attributes
        ----------
        df : pandas.DataFrame
            N, bias_id, ratio, abs_error
        '''
        model = model or gue_model()
        rows = []
        for N in Ns:
            table = recurrence_table(model, N, N)
            for bias_id, bias in singleton_pair_suite(N, delta, n_translates):
                ratio = mem_ratio(table, model, bias)
                rows.append({'N': N, 'bias_id': bias_id, 'ratio': ratio,
                             'abs_error': abs(ratio - 1.0)})
            logger.debug('mem-verify N=%d done', N)
        self.df = pd.DataFrame(rows, columns=['N', 'bias_id', 'ratio', 'abs_error'])

    def head(self, n=5):
        return self.df.sort_values('abs_error', ascending=False).head(n)

    def summary(self):
        ''' max |ratio - 1| per N, singleton and over all translates '''
        single = self.df[self.df['bias_id'] == 'singleton'].set_index('N')['abs_error']
        worst = self.df.groupby('N')['abs_error'].max()
        return pd.DataFrame({'singleton': single, 'max_over_translates': worst})

    def report(self):
        s = self.summary()
        lines = ['%6s %14s %20s' % ('N', '|ratio - 1|', 'max over translates')]
        for n, r in s.iterrows():
            lines.append('%6d %14.4e %20.4e' % (n, r['singleton'], r['max_over_translates']))
        return '\n'.join(lines)


def _subset_product(log_d, rows, cols):
    return log_d[np.ix_(rows, cols)].sum()


def matching_ratio(Z, W, T, S):
    ''' L_d(T, S) = d(T, S) d(T*, S*) / (d(T, T*) d(S, S*)) for the pseudohyperbolic d

    Parameters
    ----------
    Z, W : sequence of complex

    T, S : sequence of int
        Indices of the subsets T of Z and S of W

    Returns
    -------
    float
    '''
    Z = np.asarray(Z, dtype=complex)
    W = np.asarray(W, dtype=complex)
    if not Z.size or not W.size:
        raise DomainError('Z and W must be nonempty')
    T = sorted(set(int(t) for t in T))
    S = sorted(set(int(s) for s in S))
    T_star = [i for i in range(Z.size) if i not in T]
    S_star = [i for i in range(W.size) if i not in S]
    with np.errstate(divide='ignore'):
        zw = np.log(pseudo_dist(Z[:, None], W[None, :]))
        zz = np.log(pseudo_dist(Z[:, None], Z[None, :]))
        ww = np.log(pseudo_dist(W[:, None], W[None, :]))
    denom = _subset_product(zz, T, T_star) + _subset_product(ww, S, S_star)
    if np.isneginf(denom):
        raise DegenerateConfigurationError('coincident points between a subset and its complement')
    return float(np.exp(_subset_product(zw, T, S) + _subset_product(zw, T_star, S_star) - denom))


def _masks(n):
    return np.array(list(itertools.product((0.0, 1.0), repeat=n))).reshape(-1, n)


def matching_sup(Z, W):
    ''' sup of matching_ratio over all subsets T of Z and S of W

    Returns
    -------
    (float, list, list)
        The supremum and the maximizing index sets T, S
    '''
    Z = np.asarray(Z, dtype=complex)
    W = np.asarray(W, dtype=complex)
    with np.errstate(divide='ignore'):
        zw = np.log(pseudo_dist(Z[:, None], W[None, :]))
        zz = np.log(pseudo_dist(Z[:, None], Z[None, :]))
        ww = np.log(pseudo_dist(W[:, None], W[None, :]))
    tm, sm = _masks(Z.size), _masks(W.size)
    zz = np.where(np.eye(Z.size, dtype=bool), 0.0, zz)
    ww = np.where(np.eye(W.size, dtype=bool), 0.0, ww)
    cross = tm @ zw @ sm.T + (1.0 - tm) @ zw @ (1.0 - sm).T
    cut_z = np.einsum('ti,ij,tj->t', tm, zz, 1.0 - tm)
    cut_w = np.einsum('si,ij,sj->s', sm, ww, 1.0 - sm)
    log_l = cross - cut_z[:, None] - cut_w[None, :]
    t, s = np.unravel_index(np.argmax(log_l), log_l.shape)
    return (float(np.exp(log_l[t, s])), list(np.flatnonzero(tm[t])),
            list(np.flatnonzero(sm[s])))


class PairConfiguration:
    def __init__(self, pairs, ell_paired, epsilon):
        ''' Pairs (z_j, w_j); the first ell_paired are tight pairs, the rest
        form an epsilon-separated block '''
        self.pairs = [(complex(z), complex(w)) for z, w in pairs]
        self.ell_paired = int(ell_paired)
        self.epsilon = float(epsilon)
        if not 0 <= self.ell_paired <= len(self.pairs):
            raise DomainError('ell_paired must lie in [0, len(pairs)]')

    @property
    def Z(self):
        return np.array([z for z, _ in self.pairs])

    @property
    def W(self):
        return np.array([w for _, w in self.pairs])

    @property
    def k(self):
        return len(self.pairs) - self.ell_paired

    def __repr__(self):
        return 'PairConfiguration(k=%d, ell=%d, epsilon=%g)' % (self.k, self.ell_paired,
                                                                self.epsilon)


def pair_config_validate(config):
    ''' Both pair-configuration conditions under the pseudohyperbolic metric

    Tight pairs (j < ell): d(z_j, w_j) <= min over other w of d(w, w_j) and
    over other z of d(z, z_j). Separated block (j >= ell): d(z_i, z_j) and
    d(w_i, w_j) at least epsilon for i < j, and d(z_i, w_j) at least
    epsilon for all i, j in the block.
    '''
    Z, W = config.Z, config.W
    ell = config.ell_paired
    n = Z.size
    if not n:
        return True
    dzz = pseudo_dist(Z[:, None], Z[None, :])
    dww = pseudo_dist(W[:, None], W[None, :])
    dzw = pseudo_dist(Z[:, None], W[None, :])
    off = ~np.eye(n, dtype=bool)
    for j in range(ell):
        competitor = np.inf
        if n > 1:
            competitor = min(np.min(dww[j][off[j]]), np.min(dzz[j][off[j]]))
        if dzw[j, j] > competitor:
            return False
    tail = np.arange(ell, n)
    if tail.size:
        block_off = off[np.ix_(tail, tail)]
        if tail.size > 1:
            if np.min(dzz[np.ix_(tail, tail)][block_off]) < config.epsilon:
                return False
            if np.min(dww[np.ix_(tail, tail)][block_off]) < config.epsilon:
                return False
        if np.min(dzw[np.ix_(tail, tail)]) < config.epsilon:
            return False
    return True


def random_pair_configuration(k, ell, epsilon, rng, radius=0.9):
    ''' A valid pair-configuration with k separated and ell tight pairs '''
    for _ in range(MAX_TRIES):
        tail = []
        tries = 0
        while len(tail) < 2 * k and tries < MAX_TRIES:
            tries += 1
            cand = radius * np.sqrt(rng.random()) * np.exp(2j * np.pi * rng.random())
            if all(pseudo_dist(cand, p) >= epsilon for p in tail):
                tail.append(complex(cand))
        if len(tail) < 2 * k:
            continue
        pairs = []
        for _ in range(ell):
            z = complex(radius * np.sqrt(rng.random()) * np.exp(2j * np.pi * rng.random()))
            others = [p for pr in pairs for p in pr] + tail
            room = min([float(pseudo_dist(z, p)) for p in others] + [0.5])
            # partner at pseudo distance well inside every competing gap
            t = 0.2 * room * rng.uniform(0.2, 1.0)
            u = t * np.exp(2j * np.pi * rng.random())
            w = complex((u + z) / (1.0 + np.conj(z) * u))
            pairs.append((z, w))
        pairs += list(zip(tail[:k], tail[k:]))
        config = PairConfiguration(pairs, ell, epsilon)
        if pair_config_validate(config):
            return config
    raise DomainError('could not generate a pair-configuration (k=%d, ell=%d, eps=%g)'
                      % (k, ell, epsilon))


def matching_sweep(k_max, ell_max, epsilon, n_configs, seed=0):
    ''' matching_sup over random pair-configurations

    Configuration i draws k in [0, k_max] and ell in [0, ell_max] (at least
    one pair) from substream(seed, i).

    Returns
    -------
    pandas.DataFrame
        config_index, k, ell, sup, running_sup
    '''
    rows = []
    running = 0.0
    for i in range(n_configs):
        rng = substream(seed, i)
        k = int(rng.integers(0, k_max + 1))
        ell = int(rng.integers(0, ell_max + 1))
        if k + ell == 0:
            k = 1
        config = random_pair_configuration(k, ell, epsilon, rng)
        sup = matching_sup(config.Z, config.W)[0]
        running = max(running, sup)
        rows.append({'config_index': i, 'k': k, 'ell': ell, 'sup': sup, 'running_sup': running})
    return pd.DataFrame(rows, columns=['config_index', 'k', 'ell', 'sup', 'running_sup'])


class LowerBoundParams:
    def __init__(self, n, delta, eta, stride=1):
        ''' Depth parameters of the second-moment lower bound

        Parameters
        ----------
        n : int
            Depth, the effective log N

        delta : float
            Exponent in (0, 1/2)

        eta : int
            Barrier resolution, at least 2

        stride : int, optional
            Keep every stride-th point of the angular lattice

        Attributes
        ----------
        n0 : int
            floor((1 - delta) n)

        b : ndarray of int
            b_k = k floor(n0 / eta), k = 0 .. eta

        r : int
            Smallest k with b_k >= 2 delta n, at most eta - 1

        b_r : int
        '''
        if n < 1:
            raise DomainError('n must be at least 1')
        if not 0.0 < delta < 0.5:
            raise DomainError('delta must lie in (0, 1/2)')
        if eta < 2:
            raise DomainError('eta must be at least 2')
        if stride < 1:
            raise DomainError('stride must be at least 1')
        self.n = int(n)
        self.delta = float(delta)
        self.eta = int(eta)
        self.stride = int(stride)
        self.n0 = int(np.floor((1.0 - delta) * n))
        step = self.n0 // self.eta
        if step < 1:
            raise DomainError('eta exceeds n0 = %d' % self.n0)
        self.b = step * np.arange(self.eta + 1)
        above = np.flatnonzero(self.b >= 2.0 * delta * n)
        self.r = int(min(above[0] if above.size else self.eta - 1, self.eta - 1))
        self.b_r = int(self.b[self.r])
        self.window = self.eta * np.sqrt(self.n)
        self.omega = omega_grid(self)

    @property
    def n_omega(self):
        return self.omega.size

    def __repr__(self):
        return 'LowerBoundParams(n=%d, delta=%g, eta=%d, stride=%d)' % (
            self.n, self.delta, self.eta, self.stride)


def omega_grid(params):
    ''' Angular lattice e^{i(pi/2 + h e^{-n0})}, |h| < e^{n0 - delta n}, every stride-th h '''
    bound = np.exp(params.n0 - params.delta * params.n)
    h_max = int(np.ceil(bound)) - 1
    h = np.arange(-h_max, h_max + 1)
    h = h[h % params.stride == 0]
    return np.exp(1j * (0.5 * np.pi + h * np.exp(-params.n0)))


def midpoint(omega1, omega2, n0):
    ''' Integer closest to -log|omega1 - omega2|, floored at n0 '''
    gap = abs(complex(omega1) - complex(omega2))
    if gap == 0:
        raise DegenerateConfigurationError('midpoint of coincident points')
    return max(int(round(-np.log(gap))), int(n0))


def branch_height(omega1, omega2, n0):
    ''' round(-log|omega1 - omega2|) clipped to [0, n0], the depth where two rays split '''
    gap = np.abs(np.asarray(omega1) - np.asarray(omega2))
    with np.errstate(divide='ignore'):
        return np.clip(np.rint(-np.log(gap)), 0, n0).astype(int)


def _lattice_points(params, omegas):
    ''' Unique sample points with index maps for the top, barrier, center and ray anchors '''
    omegas = np.asarray(omegas, dtype=complex)
    levels = list(range(params.r + 1, params.eta + 1))
    top = omegas * ray_point(params.n0)
    barrier = [omegas * ray_point(params.b[k]) for k in levels]
    anchor = omegas * ray_point(params.b_r)
    base = np.array([1j * ray_point(params.b_r)])
    allpts = np.concatenate([top] + barrier + [anchor, base])
    # duplicates appear when b_eta == n0 and at the anchor of omega = i
    rounded = np.round(allpts, 15)
    _, first, inverse = np.unique(rounded, return_index=True, return_inverse=True)
    m = omegas.size
    return {'points': allpts[first],
            'top': inverse[:m],
            'barrier': [inverse[m * (i + 1):m * (i + 2)] for i in range(len(levels))],
            'anchor': inverse[m * (len(levels) + 1):m * (len(levels) + 2)],
            'base': int(inverse[-1]),
            'offsets': np.array([params.b[k] - params.b_r for k in levels], dtype=float)}


def _barrier_matrix(values, idx_barrier, idx_base, offsets, window):
    ''' (n_samples, n_omega) boolean barrier event '''
    base = values[:, idx_base]
    ok = np.ones((values.shape[0], idx_barrier[0].size if idx_barrier else 0), dtype=bool)
    for idx, off in zip(idx_barrier, offsets):
        ok &= np.abs(values[:, idx] - base[:, None] - off) <= window
    return ok


def barrier_indicator(field, omega, params):
    ''' Barrier event for one field at one lattice point

    Parameters
    ----------
    field : callable
        F(z) for the needed points, e.g. FieldSample.row_field(i)

    omega : complex
        Unimodular direction

    params : LowerBoundParams

    Returns
    -------
    bool
        |F(omega zeta_{b_k}) - F(i zeta_{b_r}) - (b_k - b_r)| <= eta sqrt(n)
        for every r < k <= eta
    '''
    base = field(1j * ray_point(params.b_r))
    for k in range(params.r + 1, params.eta + 1):
        value = field(complex(omega) * ray_point(params.b[k]))
        if abs(value - base - (params.b[k] - params.b_r)) > params.window:
            return False
    return True


def barrier_pass_rate(params, n_samples, seed, omega=1j, kind='G', base='ray'):
    ''' Probability of the barrier event under the law tilted by e^{B_omega}

    B_omega(F) = 2F(omega zeta_n0) - 2F(a(omega)) with the anchor of
    LowerBoundResult; under the tilted Gaussian law the field is shifted by
    its covariance with B_omega.
    '''
    if base not in BASES:
        raise DomainError('base must be one of %s' % ', '.join(BASES))
    kernel = GaussKernel(kind)
    lattice = _lattice_points(params, [omega])
    points, idx_base = lattice['points'], lattice['base']
    idx_barrier, offsets = lattice['barrier'], lattice['offsets']
    anchor = lattice['anchor'][0] if base == 'ray' else idx_base
    bias = BiasSpec([points[lattice['top'][0]]], [points[anchor]])
    sample = sample_gauss(points, kernel, n_samples, seed)
    values = sample.values + biased_mean(bias, kernel, points)[None, :]
    return float(_barrier_matrix(values, idx_barrier, idx_base, offsets, params.window).mean())


def barrier_sweep(n, delta, etas, n_samples, seed, kind='G'):
    ''' barrier_pass_rate over several barrier resolutions '''
    rows = []
    for eta in etas:
        params = LowerBoundParams(n, delta, eta)
        rows.append({'eta': eta, 'r': params.r, 'b_r': params.b_r,
                     'pass_rate': barrier_pass_rate(params, n_samples, seed, kind=kind)})
    return pd.DataFrame(rows)


def _ray_barrier(values, lattice, j, shift, window):
    ''' Barrier event at lattice direction j for each sample of the shifted field '''
    base = values[:, lattice['base']] + shift[lattice['base']]
    ok = np.ones(values.shape[0], dtype=bool)
    for idx, off in zip(lattice['barrier'], lattice['offsets']):
        ok &= np.abs(values[:, idx[j]] + shift[idx[j]] - base - off) <= window
    return ok


def _tilted_pair_ratio(values, lattice, shifts, cov_bb, a, b, window, single):
    ''' exp(cov(B_a, B_b)) P_{a+b}[both barriers] / (P_a[barrier a] P_b[barrier b])

    P_B is the Gaussian law shifted by the covariance with B; ``single``
    caches the one-direction pass rates.
    '''
    for j in (a, b):
        if j not in single:
            single[j] = float(_ray_barrier(values, lattice, j, shifts[:, j], window).mean())
    joint_shift = shifts[:, a] + shifts[:, b]
    joint = np.mean(_ray_barrier(values, lattice, a, joint_shift, window)
                    & _ray_barrier(values, lattice, b, joint_shift, window))
    denom = single[a] * single[b]
    if denom == 0:
        return np.nan
    return float(np.exp(cov_bb[a, b]) * joint / denom)


BASES = ('ray', 'center')


def lower_bound_mc(params, n_samples, seed, kind='G', base='ray'):
    ''' Second-moment lower-bound simulation on the Gaussian comparison field

    Returns
    -------
    LowerBoundResult
    '''
    return LowerBoundResult(params, n_samples, seed, kind, base)


class LowerBoundResult:
    def __init__(self, params, n_samples, seed, kind='G', base='ray', max_pairs=200):
        ''' Samples G on the lattice, forms Y(omega) and Z = sum Y

        Y(omega) = exp(2G(omega zeta_n0) - 2G(a(omega))) 1[barrier at omega]

        The anchor a(omega) is omega zeta_{b_r} for base='ray' and
        i zeta_{b_r} for base='center'. The barrier event and the
        recentered maximum always refer to i zeta_{b_r}.

        Parameters
        ----------
        base : {'ray', 'center'}, optional

        max_pairs : int, optional
            Pairs per branching-height bin used for the tilted two-point ratio

        Attributes
        ----------
        p_z_positive : float
            Empirical P[Z > 0]

        cs_ratio : float
            (E Z)^2 / E[Z^2] on the same samples

        one_point : pandas.DataFrame
            omega_index, mc_mean, exact_no_indicator, ratio

        df : pandas.DataFrame
            Two-point table per branching height m: pairs, empirical_ratio,
            exact_ratio_mean, exact_ratio_max, tilted_ratio, bound_factor, regime.
            tilted_ratio is exp(cov(B1, B2)) times the ratio of barrier pass
            rates under the shifted laws, averaged over evenly spaced pairs

        recentered_max : ndarray
            max over omega of G(omega zeta_n0) - G(i zeta_{b_r}) per sample
        '''
        if base not in BASES:
            raise DomainError('base must be one of %s' % ', '.join(BASES))
        self.params = params
        self.n_samples = n_samples
        self.seed = seed
        self.base = base
        kernel = GaussKernel(kind)
        omegas = params.omega
        lattice = _lattice_points(params, omegas)
        points, idx_top, idx_base = lattice['points'], lattice['top'], lattice['base']
        if base == 'ray':
            idx_anchor = lattice['anchor']
        else:
            idx_anchor = np.full(omegas.size, idx_base)
        logger.info('lower bound: %d lattice points, %d field points, %d samples, %s anchors',
                    omegas.size, points.size, n_samples, base)
        sample = sample_gauss(points, kernel, n_samples, seed)
        values = sample.values
        self.factorization = sample.factorization
        rise = values[:, idx_top] - values[:, idx_anchor]
        barrier = _barrier_matrix(values, lattice['barrier'], idx_base, lattice['offsets'],
                                  params.window)
        Y = np.exp(2.0 * rise) * barrier
        Z = Y.sum(axis=1)
        self.p_z_positive = float(np.mean(Z > 0))
        second = float(np.mean(Z ** 2))
        self.cs_ratio = float(np.mean(Z) ** 2 / second) if second > 0 else 0.0
        self.recentered_max = (values[:, idx_top] - values[:, idx_base][:, None]).max(axis=1)

        cov = kernel.matrix(points)
        c_tt = cov[np.ix_(idx_top, idx_top)]
        c_ta = cov[np.ix_(idx_top, idx_anchor)]
        c_aa = cov[np.ix_(idx_anchor, idx_anchor)]
        # cov(B1, B2) for B = 2G(top) - 2G(anchor)
        cov_bb = 4.0 * (c_tt - c_ta - c_ta.T + c_aa)
        exact_one = np.exp(0.5 * np.diag(cov_bb))
        mean_y = Y.mean(axis=0)
        self.one_point = pd.DataFrame({'omega_index': np.arange(omegas.size),
                                       'mc_mean': mean_y,
                                       'exact_no_indicator': exact_one,
                                       'ratio': mean_y / exact_one})

        # E[e^{B1 + B2}] / (E e^{B1} E e^{B2}) = exp(cov(B1, B2))
        exact_pair = np.exp(cov_bb)
        shifts = 2.0 * (cov[:, idx_top] - cov[:, idx_anchor])
        single = {}
        with np.errstate(divide='ignore', invalid='ignore'):
            empirical_pair = (Y.T @ Y / n_samples) / np.outer(mean_y, mean_y)
        heights = branch_height(omegas[:, None], omegas[None, :], params.n0)
        off = ~np.eye(omegas.size, dtype=bool)
        rows = []
        for m in np.unique(heights[off]):
            sel = off & (heights == m)
            emp = empirical_pair[sel]
            emp = emp[np.isfinite(emp)]
            pairs = np.argwhere(np.triu(sel, 1))
            pick = np.unique(np.linspace(0, len(pairs) - 1,
                                         min(len(pairs), max_pairs)).astype(int))
            tilted = np.array([_tilted_pair_ratio(values, lattice, shifts, cov_bb, a, b,
                                                  params.window, single)
                               for a, b in pairs[pick]])
            tilted = tilted[np.isfinite(tilted)]
            rows.append({'m': int(m), 'pairs': int(sel.sum()),
                         'empirical_ratio': float(emp.mean()) if emp.size else np.nan,
                         'exact_ratio_mean': float(exact_pair[sel].mean()),
                         'exact_ratio_max': float(exact_pair[sel].max()),
                         'tilted_ratio': float(tilted.mean()) if tilted.size else np.nan,
                         'bound_factor': float(np.exp(m - params.b_r + params.n / params.eta
                                                      + params.window)),
                         'regime': 'small' if m <= 0.75 * params.b_r else 'large'})
        self.df = pd.DataFrame(rows, columns=['m', 'pairs', 'empirical_ratio',
                                              'exact_ratio_mean', 'exact_ratio_max',
                                              'tilted_ratio', 'bound_factor', 'regime'])

    def fraction_above(self, threshold=None):
        ''' Share of samples whose recentered maximum exceeds threshold (default (1 - 2 delta) n) '''
        if threshold is None:
            threshold = (1.0 - 2.0 * self.params.delta) * self.params.n
        return float(np.mean(self.recentered_max > threshold))

    def factorization_error(self):
        ''' max |tilted_ratio - 1| over the small-m bins, NaN without any '''
        small = self.df.loc[self.df['regime'] == 'small', 'tilted_ratio'].dropna()
        if small.empty:
            return np.nan
        return float(np.max(np.abs(small - 1.0)))

    def summary(self):
        p = self.params
        return pd.Series({'n': p.n, 'delta': p.delta, 'eta': p.eta, 'n0': p.n0, 'r': p.r,
                          'b_r': p.b_r, 'n_omega': p.n_omega, 'stride': p.stride,
                          'n_samples': self.n_samples, 'p_z_positive': self.p_z_positive,
                          'cs_ratio': self.cs_ratio,
                          'base': self.base,
                          'median_recentered_max': float(np.median(self.recentered_max)),
                          'fraction_above': self.fraction_above(),
                          'factorization_error': self.factorization_error()})

    def to_record(self):
        ''' JSON record {n, delta, eta, p_z_positive, cs_ratio, per_m_bins[]} and run metadata '''
        p = self.params
        return {'n': p.n, 'delta': p.delta, 'eta': p.eta, 'n0': p.n0, 'r': p.r,
                'b_r': p.b_r, 'n_omega': p.n_omega, 'stride': p.stride,
                'n_samples': self.n_samples, 'seed': self.seed,
                'factorization': self.factorization,
                'p_z_positive': self.p_z_positive, 'cs_ratio': self.cs_ratio,
                'base': self.base, 'fraction_above': self.fraction_above(),
                'median_recentered_max': float(np.median(self.recentered_max)),
                'factorization_error': self.factorization_error(),
                'per_m_bins': self.df.to_dict(orient='records')}

    def report(self):
        s = self.summary()
        lines = ['n = %d, delta = %g, eta = %d (n0 = %d, b_r = %d), |Omega| = %d, %d samples'
                 % (s['n'], s['delta'], s['eta'], s['n0'], s['b_r'], s['n_omega'],
                    s['n_samples']),
                 'P[Z > 0] = %.4f   Cauchy-Schwarz ratio = %.4f' % (s['p_z_positive'],
                                                                   s['cs_ratio']),
                 'recentered max: median %.3f, share above %g = %.3f' % (
                     s['median_recentered_max'], (1.0 - 2.0 * s['delta']) * s['n'],
                     s['fraction_above']),
                 'small-m factorization error = %.4f (%s anchors)' % (
                     s['factorization_error'], s['base']),
                 '%4s %8s %14s %14s %14s %14s %7s' % ('m', 'pairs', 'empirical', 'exact mean',
                                                      'tilted', 'bound', 'regime')]
        for _, r in self.df.iterrows():
            lines.append('%4d %8d %14.4g %14.4g %14.4g %14.4g %7s' % (
                r['m'], r['pairs'], r['empirical_ratio'], r['exact_ratio_mean'],
                r['tilted_ratio'], r['bound_factor'], r['regime']))
        return '\n'.join(lines)
