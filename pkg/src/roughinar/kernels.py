"""Heavy-tailed offspring kernels and the near-critical scaling family.

The canonical family is the pure power law eta_n = c * n^(-(1+alpha)) with
tail index alpha in (1/2, 1); c doubles as the tail constant K because
alpha * n^alpha * sum_{k>n} c k^(-1-alpha) -> c. Arbitrary non-negative
sequences are accepted through `kernel_from_sequence` but only validated,
never generated.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, RangeError

__all__ = [
    "Kernel", "ScalingFamily", "build_power_law_kernel",
    "kernel_from_sequence", "tail_constant_estimate", "make_scaling_family",
    "scale_kernel", "save_kernel", "load_kernel",
]


@dataclass(frozen=True)
class Kernel:
    """Offspring kernel: eta[i] is the mass at lag i+1."""

    alpha: float
    K: float
    eta: np.ndarray
    tail_mass: float
    family: str = field(default="raw")

    def __post_init__(self):
        eta = np.ascontiguousarray(self.eta, dtype=np.float64)
        if eta.ndim != 1 or eta.size == 0:
            raise ParameterError("eta must be a non-empty 1-d sequence")
        if np.any(eta < 0):
            raise ParameterError("eta must be non-negative")
        if self.tail_mass < 0:
            raise ParameterError("tail_mass must be non-negative")
        eta.setflags(write=False)
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "K", float(self.K))
        object.__setattr__(self, "tail_mass", float(self.tail_mass))

    @property
    def n_trunc(self):
        return int(self.eta.shape[0])

    @property
    def total_mass(self):
        return float(self.eta.sum() + self.tail_mass)


@dataclass(frozen=True)
class ScalingFamily:
    """T-indexed near-critical parametrization.

    delta = K * Gamma(1 - alpha) / alpha, a_T = 1 - lambda * delta * T^-alpha,
    mu_T = nu_star * delta^-1 * T^(alpha-1), v_T = delta^-1 T^alpha (1 - a_T).
    Derived fields are computed so that v_T == lambda_rate and
    T^(1-alpha) * mu_T == nu_star / delta hold to a few ulps.
    """

    T: float
    lambda_rate: float
    nu_star: float
    alpha: float
    K: float
    delta: float
    a_T: float
    one_minus_a_T: float
    mu_T: float
    v_T: float

    @property
    def y_scale(self):
        """Space renormalization (1 - a_T) / (T^alpha nu* delta^-1)."""
        return self.one_minus_a_T * self.delta / \
            (self.T ** self.alpha * self.nu_star)


def build_power_law_kernel(alpha, n_trunc):
    """Canonical kernel eta_n = c n^(-(1+alpha)), normalized with its tail.

    The tail beyond n_trunc is bounded by the integral
    int_{n_trunc}^inf x^(-1-alpha) dx = n_trunc^-alpha / alpha; c normalizes
    stored mass plus that bound to 1, and K = c.
    """
    if not 0.5 < alpha < 1.0:
        raise ParameterError(f"alpha must lie in (0.5, 1), got {alpha}")
    n_trunc = int(n_trunc)
    if n_trunc < 16:
        raise ParameterError(f"n_trunc must be >= 16, got {n_trunc}")
    lags = np.arange(1, n_trunc + 1, dtype=np.float64)
    raw = lags ** (-(1.0 + alpha))
    tail = n_trunc ** (-alpha) / alpha
    c = 1.0 / (raw.sum() + tail)
    return Kernel(alpha=alpha, K=c, eta=c * raw, tail_mass=c * tail,
                  family="power-law")


def kernel_from_sequence(eta, alpha, K=None, tail_mass=0.0):
    """Wrap a raw non-negative sequence; validated, not generated."""
    eta = np.ascontiguousarray(eta, dtype=np.float64)
    if K is None:
        K = float(alpha * eta.size ** alpha * tail_mass) if tail_mass else 0.0
    return Kernel(alpha=float(alpha), K=float(K), eta=eta,
                  tail_mass=float(tail_mass), family="raw")


def tail_constant_estimate(kernel, n):
    """alpha * n^alpha * (stored mass beyond lag n + tail_mass)."""
    n = int(n)
    if not 1 <= n < kernel.n_trunc:
        raise RangeError(
            f"n must be in [1, {kernel.n_trunc - 1}], got {n}")
    tail_sum = float(kernel.eta[n:].sum()) + kernel.tail_mass
    return kernel.alpha * n ** kernel.alpha * tail_sum


def make_scaling_family(kernel, T, lambda_rate, nu_star):
    """Scaling family for the given kernel; rejects T below admissibility."""
    if lambda_rate <= 0 or nu_star <= 0:
        raise ParameterError("lambda_rate and nu_star must be positive")
    if T < 1:
        raise ParameterError(f"T must be >= 1, got {T}")
    alpha = kernel.alpha
    delta = kernel.K * math.gamma(1.0 - alpha) / alpha
    t_alpha = T ** alpha
    one_minus = lambda_rate * delta / t_alpha
    if not 0.0 < one_minus < 1.0:
        t_min = (lambda_rate * delta) ** (1.0 / alpha)
        raise ParameterError(
            f"a_T outside (0,1) for T={T}; minimal admissible T is "
            f"{t_min:.6g}")
    mu_t = nu_star / delta * (t_alpha / T)
    v_t = one_minus * t_alpha / delta
    return ScalingFamily(T=float(T), lambda_rate=float(lambda_rate),
                         nu_star=float(nu_star), alpha=alpha, K=kernel.K,
                         delta=delta, a_T=1.0 - one_minus,
                         one_minus_a_T=one_minus, mu_T=mu_t, v_T=v_t)


def scale_kernel(kernel, a_T):
    """eta^T = a_T * eta as a plain array."""
    if not 0.0 < a_T < 1.0:
        raise ParameterError(f"a_T must lie in (0, 1), got {a_T}")
    return a_T * kernel.eta


def save_kernel(kernel, path):
    """Two-column (lag, mass) table with an alpha/K/tail_mass header."""
    with open(path, "w") as fh:
        fh.write(f"# alpha={kernel.alpha!r} K={kernel.K!r} "
                 f"tail_mass={kernel.tail_mass!r} family={kernel.family}\n")
        for lag, mass in enumerate(kernel.eta, start=1):
            fh.write(f"{lag} {float(mass)!r}\n")


def load_kernel(path):
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("#"):
            raise ParameterError(f"{path}: missing kernel header line")
        fields = dict(tok.split("=", 1) for tok in header[1:].split())
        lags, masses = [], []
        for line in fh:
            if not line.strip():
                continue
            lag, mass = line.split()
            lags.append(int(lag))
            masses.append(float(mass))
    if lags != list(range(1, len(lags) + 1)):
        raise ParameterError(f"{path}: lags must be contiguous from 1")
    return Kernel(alpha=float(fields["alpha"]), K=float(fields["K"]),
                  eta=np.array(masses), tail_mass=float(fields["tail_mass"]),
                  family=fields.get("family", "raw"))
