"""Discrete convolution algebra and renewal sequences.

Index convention: sequences live on lags n = 1, 2, ... and are stored
0-indexed (array[i] is the value at lag i+1); the lag-0 coefficient is
identically zero, so (q*m)(n) = sum_{s=1}^{n-1} q_s m_{n-s} and (q*m)(1) = 0.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import ParameterError, RangeError, StabilityError
from .kernels import Kernel

__all__ = [
    "RenewalSequence", "DiscreteDensity", "LaplaceReport", "convolve",
    "renewal_sequence", "solve_renewal", "rho_density", "laplace_check",
    "export_density",
]


@dataclass(frozen=True)
class RenewalSequence:
    """A = sum_k eta^{*k} truncated to N lags, with running l1 sums."""

    A: np.ndarray
    a_T: float
    partial_l1: np.ndarray

    @property
    def n(self):
        return int(self.A.shape[0])

    @property
    def l1_closed_form(self):
        return self.a_T / (1.0 - self.a_T)

    @property
    def l1_truncation_gap(self):
        """Mass of A beyond the stored window under the closed-form norm."""
        return self.l1_closed_form - float(self.partial_l1[-1])


@dataclass(frozen=True)
class DiscreteDensity:
    """Density/CDF of the rescaled renewal variable on the grid x_i = i/T."""

    grid: np.ndarray
    pdf: np.ndarray
    cdf: np.ndarray
    T: float
    a_T: float
    norm_gap: float


@dataclass(frozen=True)
class LaplaceReport:
    s_values: np.ndarray
    gamma_hat: np.ndarray
    ratios: np.ndarray
    drift: float
    stabilizes: bool
    delta_ref: float


def convolve(q, m, N):
    """(q*m)(n) = sum_{s=1}^{n-1} q_s m_{n-s}, returned for n = 1..N."""
    q = np.ascontiguousarray(q, dtype=np.float64)
    m = np.ascontiguousarray(m, dtype=np.float64)
    N = int(N)
    if N > min(q.shape[0], m.shape[0]) + 1:
        raise RangeError(
            f"N={N} exceeds available length "
            f"{min(q.shape[0], m.shape[0]) + 1}")
    out = np.zeros(N)
    if N > 1:
        out[1:] = np.convolve(q[:N - 1], m[:N - 1])[:N - 1]
    return out


def _check_substochastic(eta):
    total = float(np.sum(eta))
    if total >= 1.0:
        raise StabilityError(
            f"kernel l1 norm {total:.6g} >= 1; renewal series diverges")
    return total


def renewal_sequence(eta_t, N, a_T=None, method="recursion"):
    """Resolvent A_n = eta_n + (eta*A)(n) up to lag N.

    method="recursion" is the O(N^2) defining recursion (compiled when the
    extension is present); method="doubling" accelerates via resolvent
    doubling with FFT convolutions and must agree to 1e-10.
    """
    eta_t = np.ascontiguousarray(eta_t, dtype=np.float64)
    N = int(N)
    if N < 1:
        raise RangeError("N must be >= 1")
    norm = _check_substochastic(eta_t)
    if a_T is None:
        a_T = norm
    if eta_t.shape[0] < N:
        eta_t = np.concatenate([eta_t, np.zeros(N - eta_t.shape[0])])
    eta_t = eta_t[:N]

    if method == "recursion":
        a = backend.renewal_recursion(eta_t)
    elif method == "doubling":
        a = _renewal_doubling(eta_t, norm)
    else:
        raise ParameterError(f"unknown method {method!r}")
    return RenewalSequence(A=a, a_T=float(a_T), partial_l1=np.cumsum(a))


def _renewal_doubling(eta_t, norm):
    """S_{j+1} = S_j + P_j * S_j, P_{j+1} = P_j * P_j, truncated to N."""
    n = eta_t.shape[0]
    size = 2 * n
    s = eta_t.copy()
    p = eta_t.copy()
    covered = 1  # S covers sum_{k<=covered}
    while norm ** (covered + 1) / (1.0 - norm) > 1e-14 and covered < 2 ** 40:
        fp = np.fft.rfft(p, size)
        fs = np.fft.rfft(s, size)
        # paper-convention convolution in 0-indexed arrays shifts by one lag
        cross = np.fft.irfft(fp * fs, size)[: n - 1]
        s[1:] += cross
        p = np.fft.irfft(fp * fp, size)[: n - 1]
        p = np.concatenate([[0.0], p])
        covered *= 2
    np.clip(s, 0.0, None, out=s)
    return s


def solve_renewal(eta, y, N, method="closed"):
    """Solve x = y + eta*x on lags 1..N.

    method="closed" evaluates the resolvent form x = y + A*y;
    method="direct" runs the defining recursion. The two agree to 1e-10.
    """
    eta = np.ascontiguousarray(eta, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    N = int(N)
    if y.shape[0] < N:
        raise RangeError(f"y provides {y.shape[0]} lags, need {N}")
    if np.any(y < 0):
        raise ParameterError("y must be non-negative")
    _check_substochastic(eta)
    if method == "closed":
        a = renewal_sequence(eta, N).A
        return y[:N] + convolve(a, y, N)
    if method == "direct":
        if eta.shape[0] < N:
            eta = np.concatenate([eta, np.zeros(N - eta.shape[0])])
        x = np.zeros(N)
        for i in range(N):
            acc = y[i]
            if i:
                acc += np.dot(eta[:i], x[i - 1::-1])
            x[i] = acc
        return x
    raise ParameterError(f"unknown method {method!r}")


def rho_density(A, T, horizon):
    """Discrete density rho^T and CDF F^T on the grid x_i = i/T, i <= T*horizon.

    pdf(x_i) = T * A_i / ||A||_1 with the closed-form norm a_T/(1-a_T);
    cdf(x_i) = ((1-a_T)/a_T) * sum_{s<=i} A_s. The gap between the closed-form
    norm and the stored partial sum is reported as `norm_gap`.
    """
    n_needed = int(math.floor(T * horizon + 1e-9))
    if n_needed > A.n:
        raise RangeError(
            f"need A up to lag {n_needed}, have {A.n}")
    l1 = A.l1_closed_form
    grid = np.arange(n_needed + 1, dtype=np.float64) / T
    pdf = np.zeros(n_needed + 1)
    cdf = np.zeros(n_needed + 1)
    pdf[1:] = T * A.A[:n_needed] / l1
    cdf[1:] = A.partial_l1[:n_needed] / l1
    return DiscreteDensity(grid=grid, pdf=pdf, cdf=cdf, T=float(T),
                           a_T=A.a_T, norm_gap=A.l1_truncation_gap)


def laplace_check(kernel, s_values, alpha=None, delta=None):
    """Ratio (1 - gammahat(s)) / s^alpha against delta = K Gamma(1-alpha)/alpha.

    gammahat(s) = sum_n eta_n e^{-sn} over the stored lags. `stabilizes`
    reports whether the relative drift between the two smallest s values is
    below 5%; the ratio's distance to delta is left to the caller (its
    convergence is O(s^(1-alpha)) and can be slow).
    """
    if isinstance(kernel, Kernel):
        eta = kernel.eta
        alpha = kernel.alpha if alpha is None else alpha
        if delta is None:
            delta = kernel.K * math.gamma(1.0 - kernel.alpha) / kernel.alpha
    else:
        eta = np.ascontiguousarray(kernel, dtype=np.float64)
        if alpha is None:
            raise ParameterError("alpha is required for raw sequences")
        if delta is None:
            delta = math.nan
    s = np.asarray(s_values, dtype=np.float64)
    if s.size < 2:
        raise ParameterError("need at least two s values")
    if np.any(s <= 0) or np.any(s > 0.5):
        raise ParameterError("s values must lie in (0, 0.5]")
    if np.any(np.diff(s) >= 0):
        raise ParameterError("s values must be sorted decreasing toward 0")
    lags = np.arange(1, eta.shape[0] + 1, dtype=np.float64)
    gamma_hat = np.array([float(np.sum(eta * np.exp(-si * lags)))
                          for si in s])
    ratios = (1.0 - gamma_hat) / s ** alpha
    drift = abs(ratios[-1] - ratios[-2]) / abs(ratios[-2])
    return LaplaceReport(s_values=s, gamma_hat=gamma_hat, ratios=ratios,
                         drift=float(drift), stabilizes=bool(drift < 0.05),
                         delta_ref=float(delta))


def export_density(density, path):
    """Three-column text table (x, pdf, cdf)."""
    with open(path, "w") as fh:
        fh.write("x pdf cdf\n")
        for x, p, c in zip(density.grid, density.pdf, density.cdf):
            fh.write(f"{float(x)!r} {float(p)!r} {float(c)!r}\n")
