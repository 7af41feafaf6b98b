import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import binom, hypergeom

from cutbench.errors import InvalidInput
from cutbench.moments import (
    conditioning_mass,
    cond_inverse_moment,
    cond_ratio_moments,
    deviation_bound,
    deviation_threshold,
    preserve_alpha,
    preserve_bound,
    ratio_moments_enumerated,
    sample_conditioned,
)


def moments_by_hypergeometric(c, d, p, f, g):
    """Mean and second moment of X/Y by conditioning on Y = b, where X given Y = b
    is hypergeometric (b draws from d items, c marked)."""
    b = np.arange(f, g + 1)
    wb = binom.pmf(b, d, p)
    m1 = m2 = 0.0
    for bb, w in zip(b, wb):
        x = np.arange(0, min(c, bb) + 1)
        hx = hypergeom.pmf(x, d, c, bb)
        m1 += w * (hx * x / bb).sum()
        m2 += w * (hx * (x / bb) ** 2).sum()
    return m1 / wb.sum(), m2 / wb.sum()


def test_inverse_moment_examples():
    assert cond_inverse_moment(2, 0.5, 1, 2, exact=True) == Fraction(5, 6)
    assert cond_inverse_moment(1, 0.3, 1, 1) == 1.0
    for d in (3, 17, 100):
        assert cond_inverse_moment(d, 0.7, d, d) == pytest.approx(1 / d)
    with pytest.raises(InvalidInput):
        cond_inverse_moment(5, 1.0, 1, 4)  # Y = 5 surely, the window misses it
    with pytest.raises(InvalidInput):
        cond_inverse_moment(5, 0.5, 0, 4)
    with pytest.raises(InvalidInput):
        cond_inverse_moment(100, 0.5, 1, 100, exact=True)


def test_ratio_moments_examples():
    mean, second, var = cond_ratio_moments(1, 2, 0.5, 1, 2, exact=True)
    assert (mean, second, var) == (Fraction(1, 2), Fraction(5, 12), Fraction(1, 6))
    assert ratio_moments_enumerated(1, 2, 0.5, 1, 2) == (mean, second, var)
    for d in (4, 9, 30):
        Q = cond_inverse_moment(d, 0.4, 1, d)
        assert cond_ratio_moments(1, d, 0.4, 1, d)[1] == pytest.approx(Q / d)
    with pytest.raises(InvalidInput):
        cond_ratio_moments(0, 5, 0.5, 1, 5)


def grid():
    for d in range(1, 31):
        for p in (0.05, 0.3, 0.5, 0.85, 1.0):
            for f, g in {(1, d), (1, max(1, d // 2)), (max(1, d // 3), d), (d, d)}:
                if conditioning_mass(d, p, f, g) > 1e-300:
                    yield d, p, f, g


def test_mean_and_second_moment_on_grid():
    checked = 0
    for d, p, f, g in grid():
        for c in sorted({1, max(1, d // 2), d}):
            mean, second, var = cond_ratio_moments(c, d, p, f, g)
            want_mean, want_second = moments_by_hypergeometric(c, d, p, f, g)
            assert abs(mean - c / d) <= 1e-12
            assert abs(want_mean - c / d) <= 1e-12
            assert second == pytest.approx(want_second, rel=1e-9, abs=1e-12)
            assert var <= cond_inverse_moment(d, p, f, g) * c / d + 1e-12
            checked += 1
    assert checked > 1000


def test_inverse_moment_bound_on_grid():
    seen = 0
    for d, p, f, g in grid():
        if conditioning_mass(d, p, f, g) >= 0.5:
            assert cond_inverse_moment(d, p, f, g) <= 4 / (p * d)
            seen += 1
    assert seen > 100


@pytest.mark.parametrize("d", range(1, 15))
def test_enumeration_matches_exactly(d):
    rng = np.random.default_rng(d)
    for _ in range(2 if d > 11 else 4):
        c = int(rng.integers(1, d + 1))
        f = int(rng.integers(1, d + 1))
        g = int(rng.integers(f, d + 1))
        p = Fraction(int(rng.integers(1, 16)), 16)
        assert cond_ratio_moments(c, d, p, f, g, exact=True) == ratio_moments_enumerated(c, d, p, f, g)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 200), st.floats(0.02, 1.0), st.data())
def test_float_and_log_paths_agree_with_direct_sum(d, p, data):
    f = data.draw(st.integers(1, d))
    g = data.draw(st.integers(f, d))
    b = np.arange(f, g + 1)
    w = binom.pmf(b, d, p)
    if w.sum() < 1e-200:
        return
    assert cond_inverse_moment(d, p, f, g) == pytest.approx((w / b).sum() / w.sum(), rel=1e-9)


def test_monte_carlo_moments():
    c, d, p, f, g = 3, 10, 0.4, 2, 8
    rng = np.random.default_rng(7)
    draws = rng.random((1_000_000, d)) < p
    Y = draws.sum(axis=1)
    X = draws[:, :c].sum(axis=1)
    keep = (Y >= f) & (Y <= g)
    R = X[keep] / Y[keep]
    mean, second, var = cond_ratio_moments(c, d, p, f, g)
    N = R.size
    assert abs(R.mean() - mean) <= 3 * math.sqrt(var / N)
    mu4 = ((R - R.mean()) ** 4).mean()
    assert abs(R.var() - var) <= 3 * math.sqrt((mu4 - var ** 2) / N)


def test_rejection_sampler_matches_moments():
    rng = np.random.default_rng(8)
    for _ in range(10):
        d = int(rng.integers(4, 60))
        c = int(rng.integers(1, d))
        p = float(rng.uniform(0.1, 0.9))
        f = int(rng.integers(1, max(2, int(p * d))))
        g = int(rng.integers(max(f, int(p * d)), d + 1))
        X, Y, rate = sample_conditioned(c, d, p, f, g, 200_000, rng)
        assert rate == pytest.approx(conditioning_mass(d, p, f, g), abs=5 * math.sqrt(0.25 / 200_000))
        mean, _, var = cond_ratio_moments(c, d, p, f, g)
        assert abs((X / Y).mean() - mean) <= 4 * math.sqrt(var / X.size)


def test_deviation_examples():
    k = 200
    assert preserve_bound(1, 2, k) == pytest.approx(0.5)
    assert preserve_bound(3, 7, 50) == pytest.approx(200 / 50 * 3 / 7)
    assert deviation_bound(1, 2, 20, 1e9) < 1e-18
    with pytest.warns(RuntimeWarning):
        deviation_bound(1, 2, 5, 1.0)
    with pytest.raises(InvalidInput):
        deviation_bound(1, 2, 20, 0)


@pytest.mark.parametrize("c,d,k,p,f,g", [
    (4, 20, 10, 1.0, 10, 40),      # p = 2k/d
    (4, 200, 10, 0.1, 10, 40),
    (30, 200, 40, 0.4, 40, 160),
])
def test_deviation_bound_holds_empirically(c, d, k, p, f, g):
    alpha = preserve_alpha(k)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        bound = deviation_bound(c, d, k, alpha)
    X, Y, _ = sample_conditioned(c, d, p, f, g, 1_000_000, np.random.default_rng(9))
    freq = np.mean(X / Y >= deviation_threshold(c, d, k, alpha))
    assert freq <= bound
