"""INAR(infinity) path simulation, rescaled processes and exact-identity checks.

The conditional law is X_n | F_{n-1} ~ Poisson(lambda_n) with
lambda_n = mu + sum_{s<n} eta^T_{n-s} X_s. Paths are reproducible: every
variate is keyed by (seed_base + path_index, step), so ensembles are
independent of worker count and execution order. Because keys add, two
ensembles whose [seed_base, seed_base + n_paths) ranges overlap share the
overlapping paths' randomness; space seed bases by at least n_paths when
independent ensembles are wanted.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import backend
from .errors import RangeError
from .kernels import scale_kernel
from .renewal import convolve

__all__ = [
    "PathRecord", "RescaledPath", "EnsembleSummary", "MeanFormulaReport",
    "simulate_inar", "simulate_raw", "rescale", "grid_index",
    "expected_cumulative_counts", "mean_formula_check",
    "mean_formula_check_raw", "lemma3_identity_check",
    "lemma2_decomposition_check", "run_ensemble", "export_path",
]

LAMBDA_CAP = 1e12
DEFAULT_GRID_TIMES = (0.25, 0.5, 0.75, 1.0)


@dataclass(frozen=True)
class PathRecord:
    """One simulated trajectory; N and M are cumulative counts/martingale."""

    X: np.ndarray
    lam: np.ndarray
    N: np.ndarray
    M: np.ndarray
    seed: int
    path_index: int
    mu_T: float

    @property
    def t_steps(self):
        return int(self.X.shape[0])


@dataclass(frozen=True)
class RescaledPath:
    """Grid-indexed Y, Lambda, Z, C on t_i = i/T, i = 0..t_steps."""

    grid: np.ndarray
    Y: np.ndarray
    Lambda: np.ndarray
    Z: np.ndarray
    C: np.ndarray
    T: float

    def bracket(self, t):
        """Sharp bracket [Z]_t = sum of squared Z increments up to floor(tT)."""
        idx = grid_index(t, self.T)
        dz = np.diff(self.Z[:idx + 1])
        return float(np.sum(dz * dz))


@dataclass(frozen=True)
class MeanFormulaReport:
    n: int
    ensemble: int
    mc_mean: float
    stderr: float
    closed_form: float
    z_score: float


@dataclass(frozen=True)
class EnsembleSummary:
    """Marginal samples at grid times plus terminal diagnostics, per path."""

    grid_times: tuple
    Y: np.ndarray        # (n_paths, n_times)
    Z: np.ndarray
    C: np.ndarray
    y_end: np.ndarray    # Y at the final step
    bracket_end: np.ndarray
    lam_mean: np.ndarray  # ensemble mean of lambda_n over paths, per step
    n_paths: int
    t_steps: int
    seed_base: int
    config: dict = field(default_factory=dict)

    def to_dict(self):
        times = list(self.grid_times)
        dev = self.bracket_end - self.y_end
        n = self.n_paths

        def stats_for(arr):
            return {
                "mean": [float(m) for m in arr.mean(axis=0)],
                "stderr": [float(s) for s in arr.std(axis=0, ddof=1)
                           / math.sqrt(n)],
            }

        return {
            "config": self.config,
            "n_paths": n,
            "t_steps": self.t_steps,
            "seed_base": self.seed_base,
            "grid_times": times,
            "Y": stats_for(self.Y),
            "Z": stats_for(self.Z),
            "C": stats_for(self.C),
            "bracket_minus_y_mse": float(np.mean(dev * dev)),
            "bracket_minus_y_mse_stderr":
                float(np.std(dev * dev, ddof=1) / math.sqrt(n)),
            "note": "finite-dimensional marginals only; functional "
                    "(Skorohod) convergence is not tested",
        }


def grid_index(t, T):
    """floor(t*T) with a 1e-9 snap so grid times hit their own index."""
    x = t * T
    r = round(x)
    if abs(x - r) < 1e-9:
        return int(r)
    return int(math.floor(x))


def simulate_raw(eta_t, mu_t, t_steps, seed, path_index=0):
    """Simulate one path; kernel lags beyond the stored sequence are zero."""
    eta_t = np.ascontiguousarray(eta_t, dtype=np.float64)
    x, lam = backend.simulate_inar_block(eta_t, float(mu_t), int(t_steps),
                                         int(seed), int(path_index), 1,
                                         LAMBDA_CAP)
    x = x[0]
    lam = lam[0]
    n_cum = np.cumsum(x)
    m = n_cum - np.cumsum(lam)
    return PathRecord(X=x, lam=lam, N=n_cum, M=m, seed=int(seed),
                      path_index=int(path_index), mu_T=float(mu_t))


def simulate_inar(family, kernel, t_steps, seed, path_index=0):
    """Simulate one path under the Assumption-2 parametrization."""
    if t_steps > kernel.n_trunc:
        raise RangeError(
            f"t_steps={t_steps} exceeds kernel truncation {kernel.n_trunc}")
    eta_t = scale_kernel(kernel, family.a_T)
    return simulate_raw(eta_t, family.mu_T, t_steps, seed, path_index)


def rescale(path, family):
    """Build (Y, Lambda, Z, C) on the grid t_i = i/T from a path."""
    scale = family.y_scale
    n = path.t_steps
    grid = np.arange(n + 1, dtype=np.float64) / family.T
    y = np.zeros(n + 1)
    lam_cum = np.zeros(n + 1)
    y[1:] = scale * path.N
    lam_cum[1:] = scale * np.cumsum(path.lam)
    zfac = math.sqrt(1.0 / scale)
    z = (y - lam_cum) * zfac
    c = np.empty(n + 1)
    c[0] = family.one_minus_a_T  # lambda_0 := mu_T convention
    c[1:] = family.one_minus_a_T / family.mu_T * path.lam
    return RescaledPath(grid=grid, Y=y, Lambda=lam_cum, Z=z, C=c,
                        T=family.T)


def expected_cumulative_counts(mu_t, A, n):
    """Closed form E[N_m] = mu (m + sum_{s<m} s A_{m-s}) for m = 1..n."""
    if n > A.n:
        raise RangeError(f"need A up to lag {n}, have {A.n}")
    m = np.arange(1, n + 1, dtype=np.float64)
    return mu_t * (m + convolve(m, A.A, n))


def lemma3_identity_check(path, A):
    """Max |RHS - lambda_n| for the resolvent form of the intensity.

    RHS_n = mu + mu sum_{m<n} A_m + sum_{s<n} A_{n-s} (M_s - M_{s-1}).
    Exact identity; only float accumulation should show.
    """
    n = path.t_steps
    if A.n < n:
        raise RangeError(f"need A up to lag {n}, have {A.n}")
    dm = path.X - path.lam
    cum_a = np.zeros(n)
    cum_a[1:] = A.partial_l1[:n - 1]
    rhs = path.mu_T * (1.0 + cum_a) + convolve(A.A, dm, n)
    return float(np.max(np.abs(rhs - path.lam)))


def lemma2_decomposition_check(path, A):
    """Max relative error of N_n - E[N_n] = M_n + sum_{s<n} A_{n-s} M_s."""
    n = path.t_steps
    lhs = path.N - expected_cumulative_counts(path.mu_T, A, n)
    rhs = path.M + convolve(A.A, path.M, n)
    denom = max(1.0, float(np.max(np.abs(lhs))))
    return float(np.max(np.abs(lhs - rhs)) / denom)


def _block_ranges(n_paths, block_size):
    return [(lo, min(lo + block_size, n_paths))
            for lo in range(0, n_paths, block_size)]


def _reduce_blocks(eta_t, mu_t, t_steps, n_paths, seed_base, workers,
                   block_size, reducer):
    """Run the block simulator over disjoint path ranges and reduce in order."""
    eta_t = np.ascontiguousarray(eta_t, dtype=np.float64)
    ranges = _block_ranges(n_paths, block_size)

    def work(rng):
        lo, hi = rng
        x, lam = backend.simulate_inar_block(eta_t, mu_t, t_steps, seed_base,
                                             lo, hi - lo, LAMBDA_CAP)
        return lo, reducer(lo, x, lam)

    if workers <= 1:
        results = [work(r) for r in ranges]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, ranges))
    results.sort(key=lambda item: item[0])
    return [payload for _, payload in results]


def mean_formula_check_raw(eta_t, mu_t, A, n, ensemble, seed_base=0,
                           workers=1, block_size=256):
    """Monte Carlo mean of N_n against the Lemma-2 closed form."""
    closed = float(expected_cumulative_counts(mu_t, A, n)[-1])

    def reducer(lo, x, lam):
        n_end = x.sum(axis=1).astype(np.float64)
        return n_end

    chunks = _reduce_blocks(eta_t, mu_t, n, ensemble, seed_base, workers,
                            block_size, reducer)
    samples = np.concatenate(chunks)
    mc = float(samples.mean())
    se = float(samples.std(ddof=1) / math.sqrt(ensemble))
    z = (mc - closed) / se if se > 0 else 0.0
    return MeanFormulaReport(n=n, ensemble=ensemble, mc_mean=mc, stderr=se,
                             closed_form=closed, z_score=float(z))


def mean_formula_check(family, kernel, n, ensemble, seed_base=0, workers=1):
    from .renewal import renewal_sequence
    eta_t = scale_kernel(kernel, family.a_T)
    A = renewal_sequence(eta_t, n, a_T=family.a_T)
    return mean_formula_check_raw(eta_t, family.mu_T, A, n, ensemble,
                                  seed_base, workers)


def run_ensemble(family, kernel, t_steps, n_paths, seed_base,
                 grid_times=DEFAULT_GRID_TIMES, workers=1, block_size=128,
                 config=None):
    """Simulate an ensemble and collect marginals of Y, Z, C at grid times.

    Deterministic for fixed (seed_base, n_paths) regardless of worker count:
    path p is keyed by seed_base + p and blocks are reduced in path order.
    """
    if t_steps > kernel.n_trunc:
        raise RangeError(
            f"t_steps={t_steps} exceeds kernel truncation {kernel.n_trunc}")
    eta_t = scale_kernel(kernel, family.a_T)
    scale = family.y_scale
    idx = np.array([grid_index(t, family.T) for t in grid_times])
    if np.any(idx > t_steps) or np.any(idx < 1):
        raise RangeError("grid times must map to steps 1..t_steps")
    zfac = math.sqrt(scale)
    cfac = family.one_minus_a_T / family.mu_T

    def reducer(lo, x, lam):
        n_cum = np.cumsum(x, axis=1, dtype=np.float64)
        lam_cum = np.cumsum(lam, axis=1)
        m = n_cum - lam_cum
        cols = idx - 1  # grid index i maps to step arrays at i-1
        y_t = scale * n_cum[:, cols]
        z_t = zfac * m[:, cols]
        c_t = cfac * lam[:, cols]
        y_end = scale * n_cum[:, -1]
        dev = x - lam
        bracket_end = scale * np.sum(dev * dev, axis=1)
        lam_sum = lam.sum(axis=0)
        return y_t, z_t, c_t, y_end, bracket_end, lam_sum

    chunks = _reduce_blocks(eta_t, family.mu_T, t_steps, n_paths, seed_base,
                            workers, block_size, reducer)
    y = np.concatenate([c[0] for c in chunks])
    z = np.concatenate([c[1] for c in chunks])
    c_arr = np.concatenate([c[2] for c in chunks])
    y_end = np.concatenate([c[3] for c in chunks])
    bracket_end = np.concatenate([c[4] for c in chunks])
    lam_mean = np.sum([c[5] for c in chunks], axis=0) / n_paths
    return EnsembleSummary(grid_times=tuple(grid_times), Y=y, Z=z, C=c_arr,
                           y_end=y_end, bracket_end=bracket_end,
                           lam_mean=lam_mean, n_paths=n_paths,
                           t_steps=t_steps, seed_base=int(seed_base),
                           config=dict(config or {}))


def export_path(path, fh):
    """Columnar text export (n, X, lambda, N, M)."""
    fh.write("n X lambda N M\n")
    for i in range(path.t_steps):
        fh.write(f"{i + 1} {path.X[i]} {float(path.lam[i])!r} "
                 f"{path.N[i]} {float(path.M[i])!r}\n")
