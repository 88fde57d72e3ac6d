"""Cross-backend agreement and sampler-correctness tests.

The compiled core and the numpy fallback share RNG semantics: identical
integer Philox output, and float paths equal up to transcendental-function
ulps. Statistical checks validate the exact-distribution claim of the
Poisson sampler (no Gaussian approximation).
"""

import math

import numpy as np
import pytest

import roughinar._fallback as fb
from roughinar import backend

core = pytest.importorskip("roughinar._core")

# Random123 known-answer vectors for Philox4x32-10
PHILOX_KAT = [
    ((0, 0, 0, 0), (0, 0),
     (0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8)),
    ((0xFFFFFFFF,) * 4, (0xFFFFFFFF, 0xFFFFFFFF),
     (0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd)),
    ((0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344),
     (0xa4093822, 0x299f31d0),
     (0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1)),
]


@pytest.mark.parametrize("ctr,key,want", PHILOX_KAT)
def test_philox_known_answers(ctr, key, want):
    assert core.philox4x32(*ctr, *key) == want
    got = fb.philox4x32(*ctr, *key)
    assert tuple(int(w) for w in got) == want


def test_raw_stream_bit_identical():
    for seed, path, domain, step, block in [
        (0, 0, 1, 0, 0), (12345, 7, 2, 999, 3),
        (2 ** 64 - 1, 5, 1, 2 ** 31, 1), (42, 2 ** 40, 3, 17, 0),
    ]:
        assert core.raw_block(seed, path, domain, step, block) == \
            fb.raw_block(seed, path, domain, step, block)


def test_gaussians_match():
    a = core.gaussians(99, 3, 4096)
    b = fb.gaussians(99, 3, 4096)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-14)


def test_poissons_match_across_regimes():
    lams = np.array([0.0, 0.01, 0.5, 3.0, 9.999, 10.0, 11.0, 40.0, 400.0,
                     2.5e5])
    a = core.poissons(lams, 7, 11)
    b = fb.poissons(lams, 7, 11)
    assert np.array_equal(a, b)
    assert a[0] == 0


def test_inar_block_matches():
    eta_t = 0.97 * np.array([0.4, 0.2, 0.1, 0.05])
    xa, la = core.simulate_inar_block(eta_t, 2.0, 400, 31, 0, 5)
    xb, lb = fb.simulate_inar_block(eta_t, 2.0, 400, 31, 0, 5)
    assert np.array_equal(xa, xb)
    assert np.allclose(la, lb, rtol=1e-12)


def test_volterra_block_matches():
    n_grid = 256
    grid = np.arange(n_grid + 1) / n_grid
    f_grid = 1.0 - np.exp(-grid)
    fbar = np.diff(f_grid) * n_grid
    ya, ta = core.volterra_block(fbar, f_grid, 1.0, 1.0 / n_grid, 5, 0, 4)
    yb, tb = fb.volterra_block(fbar, f_grid, 1.0, 1.0 / n_grid, 5, 0, 4)
    assert np.allclose(ya, yb, rtol=1e-10, atol=1e-13)
    assert np.array_equal(ta, tb)


def test_renewal_recursion_matches():
    rng = np.random.default_rng(3)
    eta = rng.random(300)
    eta *= 0.95 / eta.sum()
    assert np.allclose(core.renewal_recursion(eta),
                       fb.renewal_recursion(eta), rtol=1e-13, atol=1e-15)


def test_uniform_moments():
    n = 200_000
    raw = np.array([backend.raw_block(11, 0, 3, s, 0)[0] for s in
                    range(0, 2000)], dtype=np.uint64)
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53
    assert abs(u.mean() - 0.5) < 4 * math.sqrt(1 / 12 / u.size)
    z = backend.gaussians(11, 0, n)
    assert abs(z.mean()) < 4 / math.sqrt(n)
    assert abs(z.std() - 1.0) < 4 / math.sqrt(2 * n)
    kurt = np.mean((z - z.mean()) ** 4) / z.var() ** 2 - 3.0
    assert abs(kurt) < 4 * math.sqrt(24.0 / n)


@pytest.mark.parametrize("lam", [0.7, 4.0, 40.0, 250.0])
def test_poisson_moments(lam):
    n = 100_000
    draws = backend.poissons(np.full(n, lam), 123, 0)
    se_mean = math.sqrt(lam / n)
    assert abs(draws.mean() - lam) < 4 * se_mean
    # Poisson variance equals the mean; var of the sample variance is
    # ~(2 lam^2 + lam)/n
    se_var = math.sqrt((2 * lam ** 2 + lam) / n)
    assert abs(draws.var(ddof=1) - lam) < 4 * se_var


def test_poisson_skewness_small_mean():
    # third moment check guards against a Gaussian-approximation sampler
    lam, n = 2.0, 200_000
    draws = backend.poissons(np.full(n, lam), 321, 0).astype(np.float64)
    skew = np.mean((draws - draws.mean()) ** 3)
    # E[(X-lam)^3] = lam for Poisson; Gaussian would give 0
    assert abs(skew - lam) < 6 * math.sqrt(15.0 * lam ** 3 / n + lam / n)


def test_backend_reports_active():
    assert backend.ACTIVE in ("ext", "numpy")
    assert backend.impl is not None
