import mpmath as mp
import numpy as np
import pytest

import roughinar as ri


@pytest.fixture(scope="session")
def power_kernel():
    return ri.build_power_law_kernel(0.75, 4096)


@pytest.fixture(scope="session")
def family(power_kernel):
    return ri.make_scaling_family(power_kernel, 2000.0, 1.0, 1.0)


def brute_force_resolvent(eta, n, k_max):
    """Independent oracle: A = sum_{k<=k_max} eta^{*k} by repeated convolution."""
    eta = np.asarray(eta, dtype=np.float64)
    if eta.shape[0] < n:
        eta = np.concatenate([eta, np.zeros(n - eta.shape[0])])
    eta = eta[:n]
    total = eta.copy()
    power = eta.copy()
    for _ in range(2, k_max + 1):
        # paper convention: (q*m)(lag) with lags starting at 1
        power = np.concatenate([[0.0], np.convolve(power, eta)[:n - 1]])
        total += power
    return total


def ml_oracle_series(alpha, beta, z):
    """Extended-precision Taylor series with exact-precision Gamma arguments."""
    x1a = abs(z) ** (1.0 / alpha) if z else 1.0
    dps = 40 + int(0.6 * x1a)
    terms = int(5 * x1a / alpha) + 250
    with mp.workdps(dps):
        a_ = mp.mpf(alpha)
        b_ = mp.mpf(beta)
        zz = mp.mpf(z)
        return float(sum(zz ** k / mp.gamma(a_ * k + b_)
                         for k in range(terms)))


def ml_oracle_integral(alpha, beta, z, dps=35):
    """Spectral-integral oracle, valid for 0 < alpha < 1, z < 0, beta <= 1."""
    with mp.workdps(dps):
        a_, b_, z_ = mp.mpf(alpha), mp.mpf(beta), mp.mpf(z)

        def kern(r):
            num = r * mp.sin(mp.pi * (1 - b_)) \
                - z_ * mp.sin(mp.pi * (1 - b_ + a_))
            den = r * r - 2 * r * z_ * mp.cos(a_ * mp.pi) + z_ * z_
            return (1 / (a_ * mp.pi)) * r ** ((1 - b_) / a_) \
                * mp.exp(-r ** (1 / a_)) * num / den

        return float(mp.quad(kern, [0, abs(z_), mp.inf]))
