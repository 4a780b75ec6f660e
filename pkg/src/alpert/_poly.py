"""Small helpers for polynomials stored as ascending coefficient lists.

The helpers are written against plain Python arithmetic so that they work
unchanged for ``fractions.Fraction`` and for floats.
"""

from math import comb

import numpy as np


def compose_affine(coeffs, c, h):
    """Coefficients of q(t) = p(c + h t) given the coefficients of p."""
    out = [0 * c]
    for p in reversed(list(coeffs)):
        # out <- out * (c + h t) + p
        nxt = [0 * c] * (len(out) + 1)
        for r, q in enumerate(out):
            nxt[r] += q * c
            nxt[r + 1] += q * h
        nxt[0] += p
        out = nxt
    return out[: max(len(coeffs), 1)]


def reframe_matrix(a, b, n):
    """Matrix T with (T @ coeffs) giving p(a + b s) in powers of s.

    ``coeffs`` holds n ascending coefficients in the variable t = a + b s.
    Entries are floats.
    """
    T = np.zeros((n, n))
    for q in range(n):
        for r in range(q + 1):
            T[r, q] = comb(q, r) * a ** (q - r) * b ** r
    return T


def power_integral(lo, hi, n, width=None):
    """Integral of t**n over [lo, hi].

    With ``width`` = hi - lo supplied accurately (e.g. from exact endpoints),
    the factored form width·Σ hi^q lo^(n-q) avoids the cancellation of
    hi^(n+1) - lo^(n+1) on very short intervals away from the origin.
    """
    if width is None:
        return (hi ** (n + 1) - lo ** (n + 1)) / (n + 1)
    return width * sum(hi ** q * lo ** (n - q) for q in range(n + 1)) / (n + 1)


def evaluate(coeffs, t):
    """Evaluate an ascending coefficient vector at t (scalar or array)."""
    out = 0 * t
    for c in reversed(list(coeffs)):
        out = out * t + c
    return out
