"""Estimators and diagnostics for the convergence experiments.

These operationalize in-probability and in-distribution statements as
finite-sample quantities: two-sample KS on marginals, L2 Monte Carlo
estimates with standard errors, a structure-function Hoelder estimate and
the martingale-CLT diagnostic. Reports say what they test: finite
dimensional marginals and path-regularity proxies, not functional
convergence.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, RangeError
from .inar_sim import grid_index

__all__ = [
    "KSReport", "HolderReport", "MCLTReport", "ks_two_sample",
    "holder_exponent", "bracket_error", "bracket_deviation_samples",
    "mclt_diagnostic", "normality_scores",
]

# sqrt(-ln(0.005)/2): asymptotic two-sample threshold coefficient at 1%
KS_C_1PCT = 1.6276236115189503


@dataclass(frozen=True)
class KSReport:
    statistic: float
    n_a: int
    n_b: int
    threshold_1pct: float
    reject_at_1pct: bool


@dataclass(frozen=True)
class HolderReport:
    exponent: float
    r_squared: float
    scales_used: tuple
    degenerate: bool = False


@dataclass(frozen=True)
class MCLTReport:
    grid: np.ndarray
    B: np.ndarray
    qv_realized: float
    qv_expected: float


def ks_two_sample(a, b):
    """Exact two-sample Kolmogorov-Smirnov statistic via a merged sort."""
    a = np.sort(np.asarray(a, dtype=np.float64))
    b = np.sort(np.asarray(b, dtype=np.float64))
    if a.size == 0 or b.size == 0:
        raise ParameterError("samples must be non-empty")
    merged = np.concatenate([a, b])
    merged.sort(kind="mergesort")
    cdf_a = np.searchsorted(a, merged, side="right") / a.size
    cdf_b = np.searchsorted(b, merged, side="right") / b.size
    stat = float(np.max(np.abs(cdf_a - cdf_b)))
    thr = KS_C_1PCT * math.sqrt((a.size + b.size) / (a.size * b.size))
    return KSReport(statistic=stat, n_a=int(a.size), n_b=int(b.size),
                    threshold_1pct=thr, reject_at_1pct=stat > thr)


def holder_exponent(series, max_level):
    """Hoelder exponent from the q=2 structure function at dyadic lags.

    Regresses log mean squared increment on log lag over lags
    1, 2, ..., 2^(max_level-3); exponent = slope / 2. A zero structure
    function (constant series) is reported as degenerate with exponent nan.
    """
    series = np.asarray(series, dtype=np.float64)
    max_level = int(max_level)
    if max_level < 5:
        raise ParameterError("max_level must be >= 5 (need >= 3 lags)")
    if series.shape[0] < 2 ** max_level:
        raise RangeError(
            f"series length {series.shape[0]} < 2^{max_level}")
    lags = [2 ** j for j in range(max_level - 2)]
    s2 = np.array([np.mean((series[h:] - series[:-h]) ** 2) for h in lags])
    if np.any(s2 == 0.0):
        return HolderReport(exponent=math.nan, r_squared=0.0,
                            scales_used=tuple(lags), degenerate=True)
    x = np.log(np.asarray(lags, dtype=np.float64))
    y = np.log(s2)
    slope, intercept = np.polyfit(x, y, 1)
    fitted = slope * x + intercept
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return HolderReport(exponent=float(slope / 2.0), r_squared=r2,
                        scales_used=tuple(lags))


def bracket_deviation_samples(paths, t):
    """Per-path [Z]_t - Y_t over an ensemble of rescaled paths."""
    out = np.empty(len(paths))
    for i, p in enumerate(paths):
        idx = grid_index(t, p.T)
        out[i] = p.bracket(t) - p.Y[idx]
    return out


def bracket_error(paths, t):
    """Monte Carlo estimate of E[([Z]_t - Y_t)^2]; non-negative."""
    if len(paths) == 0:
        raise ParameterError("ensemble must be non-empty")
    dev = bracket_deviation_samples(paths, t)
    return float(np.mean(dev * dev))


def mclt_diagnostic(path, family):
    """Normalized martingale sum B^T_t = T^{-1/2} sum_{s<floor(tT)} dM_s/sqrt(lam_s).

    Returns B on the grid plus the realized quadratic variation at t = 1
    against its compensator (floor(T) - 1)/T. Ensemble normality of B(1) is
    scored separately (normality_scores).
    """
    t_steps = path.t_steps
    dm = path.X - path.lam
    incr = dm / np.sqrt(path.lam) / math.sqrt(family.T)
    # paper convention: the sum at t runs to floor(tT) - 1
    b = np.zeros(t_steps + 1)
    b[2:] = np.cumsum(incr[:-1])
    grid = np.arange(t_steps + 1, dtype=np.float64) / family.T
    end = grid_index(1.0, family.T)
    used = incr[:max(end - 1, 0)]
    qv = float(np.sum(used * used))
    qv_exp = (math.floor(family.T) - 1) / family.T
    return MCLTReport(grid=grid, B=b, qv_realized=qv, qv_expected=qv_exp)


def normality_scores(samples):
    """(mean z-score, excess-kurtosis z-score) for a unit-variance target."""
    samples = np.asarray(samples, dtype=np.float64)
    n = samples.size
    if n < 8:
        raise ParameterError("need at least 8 samples")
    mean_z = samples.mean() / (samples.std(ddof=1) / math.sqrt(n))
    centered = samples - samples.mean()
    m2 = np.mean(centered ** 2)
    kurt = np.mean(centered ** 4) / m2 ** 2 - 3.0
    kurt_z = kurt / math.sqrt(24.0 / n)
    return float(mean_z), float(kurt_z)
