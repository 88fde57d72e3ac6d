# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: Philox4x32-10 counter RNG, exact Poisson sampling,
the INAR intensity recursion, the renewal recursion and the Volterra-Euler
convolution loop.

Semantics are shared with `roughinar._fallback`; see that module's docstring
for the RNG keying discipline.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt, log, exp, cos, fabs, floor, lgamma

from .errors import StabilityError

cnp.import_array()

cdef extern from *:
    """
    #define PHILOX_M0 0xD2511F53u
    #define PHILOX_M1 0xCD9E8D57u
    #define PHILOX_W0 0x9E3779B9u
    #define PHILOX_W1 0xBB67AE85u
    """
    unsigned int PHILOX_M0
    unsigned int PHILOX_M1
    unsigned int PHILOX_W0
    unsigned int PHILOX_W1

DEF TWO_PI = 6.283185307179586476925286766559
DEF INV_2_53 = 1.1102230246251565404236316680908e-16   # 2^-53

DOMAIN_POISSON = 1
DOMAIN_GAUSS = 2
DOMAIN_UNIFORM = 3

POISSON_INVERSION_CUTOFF = 10.0

cdef int _DOM_POISSON = 1
cdef int _DOM_GAUSS = 2


cdef inline void _philox_block(unsigned int c0, unsigned int c1,
                               unsigned int c2, unsigned int c3,
                               unsigned int k0, unsigned int k1,
                               unsigned int* out) nogil:
    cdef unsigned long long p0, p1
    cdef unsigned int hi0, lo0, hi1, lo1
    cdef int r
    for r in range(10):
        p0 = (<unsigned long long> PHILOX_M0) * c0
        p1 = (<unsigned long long> PHILOX_M1) * c2
        hi0 = <unsigned int> (p0 >> 32)
        lo0 = <unsigned int> p0
        hi1 = <unsigned int> (p1 >> 32)
        lo1 = <unsigned int> p1
        c0 = hi1 ^ c1 ^ k0
        c1 = lo1
        c2 = hi0 ^ c3 ^ k1
        c3 = lo0
        k0 = k0 + PHILOX_W0
        k1 = k1 + PHILOX_W1
    out[0] = c0
    out[1] = c1
    out[2] = c2
    out[3] = c3


cdef inline void _unit_pair(unsigned long long key, unsigned int block,
                            unsigned int step, unsigned int domain,
                            double* ua, double* ub) nogil:
    cdef unsigned int w[4]
    cdef unsigned long long a, b
    _philox_block(block, step, domain, 0,
                  <unsigned int> key, <unsigned int> (key >> 32), w)
    a = ((<unsigned long long> w[1]) << 32) | w[0]
    b = ((<unsigned long long> w[3]) << 32) | w[2]
    ua[0] = ((a >> 11) + 0.5) * INV_2_53
    ub[0] = ((b >> 11) + 0.5) * INV_2_53


cdef inline double _gaussian(unsigned long long key, unsigned int step) nogil:
    cdef double u1, u2
    _unit_pair(key, 0, step, _DOM_GAUSS, &u1, &u2)
    return sqrt(-2.0 * log(u1)) * cos(TWO_PI * u2)


cdef inline long long _poisson(double lam, unsigned long long key,
                               unsigned int step) nogil:
    cdef double u, v, p, cum, slam, loglam, b, a, invalpha, vr, us, k
    cdef long long ki
    cdef unsigned int attempt
    if lam <= 0.0:
        return 0
    if lam < 10.0:
        _unit_pair(key, 0, step, _DOM_POISSON, &u, &v)
        p = exp(-lam)
        cum = p
        ki = 0
        while u > cum and ki < 4000:
            ki += 1
            p *= lam / ki
            cum += p
        return ki
    slam = sqrt(lam)
    loglam = log(lam)
    b = 0.931 + 2.53 * slam
    a = -0.059 + 0.02483 * b
    invalpha = 1.1239 + 1.1328 / (b - 3.4)
    vr = 0.9277 - 3.6224 / (b - 2.0)
    attempt = 0
    while True:
        _unit_pair(key, attempt, step, _DOM_POISSON, &u, &v)
        attempt += 1
        u -= 0.5
        us = 0.5 - fabs(u)
        k = floor((2.0 * a / us + b) * u + lam + 0.43)
        if us >= 0.07 and v <= vr:
            return <long long> k
        if k < 0 or (us < 0.013 and v > us):
            continue
        if log(v * invalpha / (a / (us * us) + b)) <= \
                k * loglam - lam - lgamma(k + 1.0):
            return <long long> k


cdef inline unsigned long long _path_key(unsigned long long seed_base,
                                         long long path_index) nogil:
    return seed_base + <unsigned long long> path_index


# ---------------------------------------------------------------- test hooks

def raw_block(seed_base, path_index, domain, step, block):
    """Tuple of the two u64 output words for one counter. Test hook."""
    cdef unsigned long long key = _path_key(seed_base, path_index)
    cdef unsigned int w[4]
    _philox_block(<unsigned int> block, <unsigned int> step,
                  <unsigned int> domain, 0,
                  <unsigned int> key, <unsigned int> (key >> 32), w)
    cdef unsigned long long a = ((<unsigned long long> w[1]) << 32) | w[0]
    cdef unsigned long long b = ((<unsigned long long> w[3]) << 32) | w[2]
    return int(a), int(b)


def philox4x32(c0, c1, c2, c3, k0, k1):
    """Scalar Philox4x32-10 block (known-answer-test hook)."""
    cdef unsigned int w[4]
    _philox_block(<unsigned int> c0, <unsigned int> c1, <unsigned int> c2,
                  <unsigned int> c3, <unsigned int> k0, <unsigned int> k1, w)
    return int(w[0]), int(w[1]), int(w[2]), int(w[3])


def gaussians(seed_base, path_index, n):
    """n standard normals at steps 0..n-1 (Box-Muller, one block each)."""
    cdef unsigned long long key = _path_key(seed_base, path_index)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n)
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    cdef Py_ssize_t nn = n
    with nogil:
        for i in range(nn):
            ov[i] = _gaussian(key, <unsigned int> i)
    return out


def poissons(lams, seed_base, path_index):
    """One Poisson(lams[s]) draw per step s, keyed like the path simulator."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] l = \
        np.ascontiguousarray(lams, dtype=np.float64)
    cdef unsigned long long key = _path_key(seed_base, path_index)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out = np.empty(l.shape[0],
                                                         dtype=np.int64)
    cdef long long[::1] ov = out
    cdef double[::1] lv = l
    cdef Py_ssize_t i
    with nogil:
        for i in range(lv.shape[0]):
            ov[i] = _poisson(lv[i], key, <unsigned int> i)
    return out


# --------------------------------------------------------------- hot kernels

def renewal_recursion(eta_t):
    """A_n = eta_n + sum_{s<n} eta_s A_{n-s}, arrays 0-indexed at lag 1."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] e = \
        np.ascontiguousarray(eta_t, dtype=np.float64)
    cdef Py_ssize_t n = e.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] a = np.zeros(n)
    cdef double[::1] av = a
    cdef double[::1] ev = e
    cdef Py_ssize_t i, j
    cdef double acc
    with nogil:
        for i in range(n):
            acc = ev[i]
            for j in range(i):
                acc += ev[j] * av[i - 1 - j]
            av[i] = acc
    return a


def simulate_inar_block(eta_t, mu_t, t_steps, seed_base, path0, n_paths,
                        lam_cap=1e12):
    """Simulate n_paths INAR paths with absolute path indices path0..path0+n-1.

    Returns (X int64 (n_paths, t_steps), lam float64 (n_paths, t_steps)).
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=1] e = \
        np.ascontiguousarray(eta_t, dtype=np.float64)
    cdef Py_ssize_t steps = t_steps
    cdef Py_ssize_t m = e.shape[0]
    cdef Py_ssize_t npaths = n_paths
    cdef cnp.ndarray[cnp.int64_t, ndim=2] x = \
        np.zeros((npaths, steps), dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] lam = np.zeros((npaths, steps))
    cdef long long[:, ::1] xv = x
    cdef double[:, ::1] lv = lam
    cdef double[::1] ev = e
    cdef double mu = mu_t
    cdef double cap = lam_cap
    cdef unsigned long long seed = seed_base
    cdef long long p0 = path0
    cdef unsigned long long key
    cdef Py_ssize_t p, s, j, q
    cdef double acc
    cdef int blew = 0
    cdef long long blew_step = -1
    with nogil:
        for p in range(npaths):
            key = _path_key(seed, p0 + p)
            for s in range(steps):
                acc = mu
                q = s if s < m else m  # lags beyond the stored kernel are 0
                for j in range(q):
                    acc += ev[j] * xv[p, s - 1 - j]
                if acc > cap:
                    blew = 1
                    blew_step = s + 1
                    break
                lv[p, s] = acc
                xv[p, s] = _poisson(acc, key, <unsigned int> s)
            if blew:
                break
    if blew:
        raise StabilityError(
            f"intensity exceeded cap {cap:g} at step {blew_step}")
    return x, lam


def volterra_block(fbar, f_grid, noise_coef, dt, seed_base, path0, n_paths):
    """Left-point Volterra-Euler block.

    fbar: cell-averaged kernel values, length n_grid.
    f_grid: drift F(t_k) on the grid, length n_grid + 1.
    Returns (ydot_raw (n_paths, n_grid+1), trunc_counts int64 (n_paths,)).
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=1] fb = \
        np.ascontiguousarray(fbar, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] fg = \
        np.ascontiguousarray(f_grid, dtype=np.float64)
    cdef Py_ssize_t n_grid = fb.shape[0]
    cdef Py_ssize_t npaths = n_paths
    cdef cnp.ndarray[cnp.float64_t, ndim=2] raw = \
        np.zeros((npaths, n_grid + 1))
    cdef cnp.ndarray[cnp.int64_t, ndim=1] trunc = \
        np.zeros(npaths, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] u = np.zeros(n_grid)
    cdef double[:, ::1] rv = raw
    cdef long long[::1] tv = trunc
    cdef double[::1] uv = u
    cdef double[::1] fbv = fb
    cdef double[::1] fgv = fg
    cdef double coef = noise_coef
    cdef double sqdt = sqrt(dt)
    cdef unsigned long long seed = seed_base
    cdef long long p0 = path0
    cdef unsigned long long key
    cdef Py_ssize_t p, k, j
    cdef double stored_prev, conv, prop
    with nogil:
        for p in range(npaths):
            key = _path_key(seed, p0 + p)
            stored_prev = 0.0
            for k in range(1, n_grid + 1):
                uv[k - 1] = sqrt(stored_prev if stored_prev > 0.0 else 0.0) * \
                    (sqdt * _gaussian(key, <unsigned int> (k - 1)))
                conv = 0.0
                for j in range(k):
                    conv += fbv[k - 1 - j] * uv[j]
                prop = fgv[k] + coef * conv
                rv[p, k] = prop
                if prop < 0.0:
                    tv[p] += 1
                    stored_prev = 0.0
                else:
                    stored_prev = prop
    return raw, trunc
