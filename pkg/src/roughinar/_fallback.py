"""Pure-numpy implementations of the hot kernels.

Used when the compiled extension (`roughinar._core`) is unavailable or when
explicitly requested. Semantics match the extension: the Philox4x32-10 stream
is bit-identical (pure integer ops); float outputs agree to the last few ulps
(BLAS accumulation order and libm/SIMD transcendentals may differ).

RNG discipline: every variate is a pure function of
(seed_base + path_index, domain, step, draw_block), so results do not depend
on execution order or worker count.
"""

import numpy as np
from scipy.special import gammaln

from .errors import StabilityError

PHILOX_M0 = np.uint64(0xD2511F53)
PHILOX_M1 = np.uint64(0xCD9E8D57)
PHILOX_W0 = np.uint32(0x9E3779B9)
PHILOX_W1 = np.uint32(0xBB67AE85)

DOMAIN_POISSON = 1
DOMAIN_GAUSS = 2
DOMAIN_UNIFORM = 3

_U64_MASK = (1 << 64) - 1
_INV_2_53 = float(2.0 ** -53)

POISSON_INVERSION_CUTOFF = 10.0


def _key_words(seed_base, path_index):
    key = (int(seed_base) + int(path_index)) & _U64_MASK
    return np.uint32(key & 0xFFFFFFFF), np.uint32(key >> 32)


def philox4x32(c0, c1, c2, c3, k0, k1):
    """One Philox4x32-10 block over uint32 arrays (or scalars)."""
    c0 = np.asarray(c0, dtype=np.uint32)
    c1 = np.asarray(c1, dtype=np.uint32)
    c2 = np.asarray(c2, dtype=np.uint32)
    c3 = np.asarray(c3, dtype=np.uint32)
    k0 = np.asarray(k0, dtype=np.uint32).copy()
    k1 = np.asarray(k1, dtype=np.uint32).copy()
    with np.errstate(over="ignore"):
        for _ in range(10):
            p0 = PHILOX_M0 * c0.astype(np.uint64)
            p1 = PHILOX_M1 * c2.astype(np.uint64)
            hi0 = (p0 >> np.uint64(32)).astype(np.uint32)
            lo0 = p0.astype(np.uint32)
            hi1 = (p1 >> np.uint64(32)).astype(np.uint32)
            lo1 = p1.astype(np.uint32)
            c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
            k0 = k0 + PHILOX_W0
            k1 = k1 + PHILOX_W1
    return c0, c1, c2, c3


def _block_u64(k0, k1, block, step, domain):
    """Two u64 words from the (block, step, domain, 0) counter."""
    c0 = np.asarray(block, dtype=np.uint32)
    c1 = np.asarray(step, dtype=np.uint32)
    c2 = np.full_like(c0, np.uint32(domain))
    c3 = np.zeros_like(c0)
    w0, w1, w2, w3 = philox4x32(c0, c1, c2, c3, k0, k1)
    ua = (w1.astype(np.uint64) << np.uint64(32)) | w0.astype(np.uint64)
    ub = (w3.astype(np.uint64) << np.uint64(32)) | w2.astype(np.uint64)
    return ua, ub


def _to_unit(u64):
    # strictly inside (0, 1)
    return ((u64 >> np.uint64(11)).astype(np.float64) + 0.5) * _INV_2_53


def raw_block(seed_base, path_index, domain, step, block):
    """Tuple of the two u64 output words for one counter. Test hook."""
    k0, k1 = _key_words(seed_base, path_index)
    ua, ub = _block_u64(k0, k1, block, step, domain)
    return int(ua), int(ub)


def uniform_pair(k0, k1, step, block):
    ua, ub = _block_u64(k0, k1, block, step, DOMAIN_POISSON)
    return _to_unit(ua), _to_unit(ub)


def gaussians(seed_base, path_index, n):
    """n standard normals at steps 0..n-1 (Box-Muller, one block each)."""
    k0, k1 = _key_words(seed_base, path_index)
    steps = np.arange(n, dtype=np.uint32)
    ua, ub = _block_u64(np.broadcast_to(k0, steps.shape),
                        np.broadcast_to(k1, steps.shape),
                        np.zeros(n, dtype=np.uint32), steps, DOMAIN_GAUSS)
    u1 = _to_unit(ua)
    u2 = _to_unit(ub)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def _poisson_column(lams, k0_arr, k1_arr, step):
    """One Poisson draw per lane; lane i keyed by (k0_arr[i], k1_arr[i], step)."""
    lams = np.asarray(lams, dtype=np.float64)
    n = lams.shape[0]
    out = np.zeros(n, dtype=np.int64)
    step_arr = np.full(n, np.uint32(step), dtype=np.uint32)

    small = (lams > 0.0) & (lams < POISSON_INVERSION_CUTOFF)
    if small.any():
        ua, _ = _block_u64(k0_arr[small], k1_arr[small],
                           np.zeros(small.sum(), dtype=np.uint32),
                           step_arr[small], DOMAIN_POISSON)
        u = _to_unit(ua)
        lam_s = lams[small]
        p = np.exp(-lam_s)
        cum = p.copy()
        k = np.zeros(lam_s.shape[0], dtype=np.int64)
        active = u > cum
        while active.any():
            k[active] += 1
            p[active] *= lam_s[active] / k[active]
            cum[active] += p[active]
            active = (u > cum) & (k < 4000)
        out[small] = k

    big = lams >= POISSON_INVERSION_CUTOFF
    if big.any():
        out[big] = _poisson_ptrs(lams[big], k0_arr[big], k1_arr[big],
                                 step_arr[big])
    return out


def _poisson_ptrs(lams, k0, k1, steps):
    """Hoermann's PTRS transformed rejection, valid for lam >= 10."""
    n = lams.shape[0]
    slam = np.sqrt(lams)
    loglam = np.log(lams)
    b = 0.931 + 2.53 * slam
    a = -0.059 + 0.02483 * b
    invalpha = 1.1239 + 1.1328 / (b - 3.4)
    vr = 0.9277 - 3.6224 / (b - 2.0)

    out = np.zeros(n, dtype=np.int64)
    attempt = np.zeros(n, dtype=np.uint32)
    todo = np.ones(n, dtype=bool)
    while todo.any():
        idx = np.nonzero(todo)[0]
        ua, ub = _block_u64(k0[idx], k1[idx], attempt[idx], steps[idx],
                            DOMAIN_POISSON)
        attempt[idx] += 1
        U = _to_unit(ua) - 0.5
        V = _to_unit(ub)
        us = 0.5 - np.abs(U)
        k = np.floor((2.0 * a[idx] / us + b[idx]) * U + lams[idx] + 0.43)

        acc1 = (us >= 0.07) & (V <= vr[idx])
        reject = (k < 0) | ((us < 0.013) & (V > us))
        with np.errstate(divide="ignore", invalid="ignore"):
            lhs = np.log(V * invalpha[idx] / (a[idx] / (us * us) + b[idx]))
            rhs = k * loglam[idx] - lams[idx] - gammaln(k + 1.0)
            acc2 = (~reject) & (lhs <= rhs)
        accept = acc1 | acc2
        hit = idx[accept]
        out[hit] = k[accept].astype(np.int64)
        todo[hit] = False
    return out


def poissons(lams, seed_base, path_index):
    """One Poisson(lams[s]) draw per step s, keyed like the path simulator."""
    lams = np.asarray(lams, dtype=np.float64)
    k0, k1 = _key_words(seed_base, path_index)
    k0a = np.array([k0], dtype=np.uint32)
    k1a = np.array([k1], dtype=np.uint32)
    out = np.empty(lams.shape[0], dtype=np.int64)
    for s in range(lams.shape[0]):
        out[s] = _poisson_column(lams[s:s + 1], k0a, k1a, s)[0]
    return out


def renewal_recursion(eta_t):
    """A_n = eta_n + sum_{s<n} eta_s A_{n-s}, arrays 0-indexed at lag 1."""
    eta_t = np.ascontiguousarray(eta_t, dtype=np.float64)
    n = eta_t.shape[0]
    a = np.zeros(n)
    for i in range(n):
        acc = eta_t[i]
        if i:
            acc += np.dot(eta_t[:i], a[i - 1::-1])
        a[i] = acc
    return a


def simulate_inar_block(eta_t, mu_t, t_steps, seed_base, path0, n_paths,
                        lam_cap=1e12):
    """Simulate n_paths INAR paths with absolute path indices path0..path0+n-1.

    Returns (X int64 (n_paths, t_steps), lam float64 (n_paths, t_steps)).
    """
    eta_t = np.ascontiguousarray(eta_t, dtype=np.float64)
    rev = eta_t[::-1].copy()
    m = rev.shape[0]

    keys = [(int(seed_base) + int(path0) + p) & _U64_MASK
            for p in range(n_paths)]
    k0 = np.array([k & 0xFFFFFFFF for k in keys], dtype=np.uint32)
    k1 = np.array([k >> 32 for k in keys], dtype=np.uint32)

    x_int = np.zeros((n_paths, t_steps), dtype=np.int64)
    x_f = np.zeros((n_paths, t_steps), dtype=np.float64)
    lam = np.zeros((n_paths, t_steps), dtype=np.float64)
    for s in range(t_steps):
        q = min(s, m)  # lags beyond the stored kernel are 0
        if q:
            col = mu_t + x_f[:, s - q:s] @ rev[m - q:]
        else:
            col = np.full(n_paths, mu_t)
        if np.any(col > lam_cap):
            raise StabilityError(
                f"intensity exceeded cap {lam_cap:g} at step {s + 1}")
        lam[:, s] = col
        draws = _poisson_column(col, k0, k1, s)
        x_int[:, s] = draws
        x_f[:, s] = draws
    return x_int, lam


def volterra_block(fbar, f_grid, noise_coef, dt, seed_base, path0, n_paths):
    """Left-point Volterra-Euler block.

    fbar: cell-averaged kernel values, length n_grid.
    f_grid: drift F(t_k) on the grid, length n_grid + 1.
    Returns (ydot_raw (n_paths, n_grid+1), trunc_counts int64 (n_paths,)).
    """
    fbar = np.ascontiguousarray(fbar, dtype=np.float64)
    f_grid = np.ascontiguousarray(f_grid, dtype=np.float64)
    n_grid = fbar.shape[0]
    sqdt = np.sqrt(dt)

    raw = np.zeros((n_paths, n_grid + 1))
    trunc = np.zeros(n_paths, dtype=np.int64)
    z = np.empty((n_paths, n_grid))
    for p in range(n_paths):
        z[p] = gaussians(seed_base, path0 + p, n_grid)
    db = sqdt * z

    stored_prev = np.zeros(n_paths)
    u = np.zeros((n_paths, n_grid))
    fbar_rev = fbar[::-1].copy()
    for k in range(1, n_grid + 1):
        u[:, k - 1] = np.sqrt(np.maximum(stored_prev, 0.0)) * db[:, k - 1]
        conv = u[:, :k] @ fbar_rev[n_grid - k:]
        prop = f_grid[k] + noise_coef * conv
        raw[:, k] = prop
        trunc += (prop < 0.0).astype(np.int64)
        stored_prev = np.maximum(prop, 0.0)
    return raw, trunc
