"""Conditional moments of the sampled-neighbour ratio.

A vertex has d neighbours, c of them across a fixed cut. Each neighbour is
sampled independently with probability p; Y counts sampled neighbours and X
the sampled cut neighbours. Everything is conditioned on f <= Y <= g.
"""
from __future__ import annotations

import math
import warnings
from fractions import Fraction

import numpy as np
from scipy.special import gammaln

from .errors import ContractViolation, InvalidInput

# exact rational arithmetic up to this degree, log-space floats above
EXACT_LIMIT = 64


def _check(d, p, f, g):
    if d < 1 or not 0 < p <= 1:
        raise InvalidInput("need d >= 1 and 0 < p <= 1")
    if not 0 < f <= g <= d:
        raise InvalidInput("need 0 < f <= g <= d")


def _pmf_exact(d: int, p, f: int, g: int) -> list[Fraction]:
    p = Fraction(p)
    return [math.comb(d, b) * p ** b * (1 - p) ** (d - b) for b in range(f, g + 1)]


def _pmf_log(d: int, p: float, f: int, g: int) -> np.ndarray:
    b = np.arange(f, g + 1)
    if p == 1:
        return (b == d).astype(float)
    logpmf = gammaln(d + 1) - gammaln(b + 1) - gammaln(d - b + 1) + b * math.log(p) + (d - b) * math.log1p(-p)
    return np.exp(logpmf)


def conditioning_mass(d: int, p, f: int, g: int):
    """Pr[f <= Y <= g] for Y ~ Bin(d, p)."""
    _check(d, p, f, g)
    if d <= EXACT_LIMIT:
        return float(sum(_pmf_exact(d, p, f, g)))
    return float(_pmf_log(d, p, f, g).sum())


def cond_inverse_moment(d: int, p, f: int, g: int, exact: bool = False):
    """E[1/Y | f <= Y <= g] for Y ~ Bin(d, p).

    With exact=True (d <= EXACT_LIMIT) the value is a Fraction computed from
    the binary value of p. When the conditioning mass is at least 1/2 the
    result is checked against the bound 4 / (p d).
    """
    _check(d, p, f, g)
    if d <= EXACT_LIMIT:
        pmf = _pmf_exact(d, p, f, g)
        mass = sum(pmf)
        if mass == 0:
            raise InvalidInput("conditioning event has probability zero")
        Q = sum(w / b for b, w in zip(range(f, g + 1), pmf)) / mass
        mass = float(mass)
    else:
        if exact:
            raise InvalidInput(f"exact evaluation is limited to d <= {EXACT_LIMIT}")
        pmf = _pmf_log(d, float(p), f, g)
        mass = pmf.sum()
        if mass == 0:
            raise InvalidInput("conditioning event has probability zero (or underflows)")
        Q = float((pmf / np.arange(f, g + 1)).sum() / mass)
    if mass >= 0.5 and float(Q) > 4 / (float(p) * d) * (1 + 1e-12):
        raise ContractViolation(f"Q={float(Q)} above 4/(pd) with conditioning mass {mass}")
    return Q if exact else float(Q)


def cond_ratio_moments(c: int, d: int, p, f: int, g: int, exact: bool = False):
    """(mean, second moment, variance) of X/Y given f <= Y <= g."""
    if not 0 < c <= d:
        raise InvalidInput("need 0 < c <= d")
    Q = cond_inverse_moment(d, p, f, g, exact=exact)
    one = Fraction(1) if exact else 1.0
    mean = one * c / d
    pair = one * c * (c - 1) / (d * (d - 1)) if d > 1 else 0 * one
    second = pair + (mean - pair) * Q
    var = second - mean * mean
    if float(var) > float(Q) * c / d * (1 + 1e-12) + 1e-15:
        raise ContractViolation(f"variance {float(var)} above Q c/d")
    return mean, second, var


def ratio_moments_enumerated(c: int, d: int, p, f: int, g: int):
    """Same three numbers by summing over all 2^d neighbour subsets (exact, small d only)."""
    if d > 20:
        raise InvalidInput("enumeration is limited to d <= 20")
    p = Fraction(p)
    mass = m1 = m2 = Fraction(0)
    for mask in range(1 << d):
        y = mask.bit_count()
        if not f <= y <= g:
            continue
        # the first c neighbours are the cut neighbours
        x = (mask & ((1 << c) - 1)).bit_count()
        w = p ** y * (1 - p) ** (d - y)
        mass += w
        m1 += w * Fraction(x, y)
        m2 += w * Fraction(x * x, y * y)
    if mass == 0:
        raise InvalidInput("conditioning event has probability zero")
    mean, second = m1 / mass, m2 / mass
    return mean, second, second - mean * mean


def sample_conditioned(c: int, d: int, p: float, f: int, g: int, size: int, rng):
    """Rejection sampling of (X, Y) given f <= Y <= g.

    Returns (X, Y, acceptance rate); fewer than `size` pairs come back when
    draws are rejected.
    """
    rng = np.random.default_rng(rng)
    X = rng.binomial(c, p, size)
    Y = X + rng.binomial(d - c, p, size)
    keep = (Y >= f) & (Y <= g)
    return X[keep], Y[keep], float(keep.mean())


def deviation_bound(c: int, d: int, k: float, alpha: float) -> float:
    """Chebyshev bound (1/alpha^2)(c/d) on Pr[X/Y >= c/d + alpha sqrt(2/k)]."""
    if alpha <= 0 or not 0 < c <= d:
        raise InvalidInput("need alpha > 0 and 0 < c <= d")
    if k < 10:
        warnings.warn(f"k={k} below 10: outside the regime where the bound is derived",
                      RuntimeWarning, stacklevel=2)
    return c / d / alpha ** 2


def preserve_alpha(k: float) -> float:
    return math.sqrt(k / 2) / 10


def preserve_bound(c: int, d: int, k: float) -> float:
    """deviation_bound at alpha = sqrt(k/2)/10, which equals (200/k)(c/d)."""
    return deviation_bound(c, d, k, preserve_alpha(k))


def deviation_threshold(c: int, d: int, k: float, alpha: float) -> float:
    return c / d + alpha * math.sqrt(2 / k)
