"""Special functions used by the closed-form performance expressions.

All functions accept scalars or numpy arrays and return the same shape.
"""

import math

import numpy as np
from scipy import special

EULER_GAMMA = 0.57721566490153286061

_SQRT2 = math.sqrt(2.0)
_SERIES_TERMS = 40
_CF_MAX_ITER = 500
_CF_TOL = 4e-16
_TINY = 1e-300


def q_function(x):
    """Gaussian tail probability Q(x) = P(Z > x) for standard normal Z."""
    x = np.asarray(x, dtype=float)
    out = 0.5 * special.erfc(x / _SQRT2)
    return out if out.ndim else float(out)


def erf(x):
    x = np.asarray(x, dtype=float)
    out = special.erf(x)
    return out if out.ndim else float(out)


def exp_e1(x):
    """Scaled exponential integral ``exp(x) * E1(x)`` for ``x > 0``.

    The product is formed directly, so the result stays finite where
    ``exp(x)`` overflows and ``E1(x)`` underflows (x in the hundreds).
    Uses the convergent power series below 1 and a continued fraction
    (modified Lentz) from 1 upward.
    """
    x = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(x)) or np.any(x <= 0):
        raise ValueError("exp_e1 requires finite x > 0")
    out = np.empty_like(x)
    small = x < 1.0
    if np.any(small):
        out[small] = _series(x[small])
    if np.any(~small):
        out[~small] = _continued_fraction(x[~small])
    return out if out.ndim else float(out)


def _series(x):
    # E1(x) = -gamma - ln x - sum_{k>=1} (-x)^k / (k * k!)
    total = np.zeros_like(x)
    term = np.ones_like(x)
    for k in range(1, _SERIES_TERMS + 1):
        term = term * (-x) / k
        total += term / k
    return np.exp(x) * (-EULER_GAMMA - np.log(x) - total)


def _continued_fraction(x):
    # e^x E1(x) = 1/(x+1- 1/(x+3- 4/(x+5- 9/(x+7- ...))))
    b = x + 1.0
    c = np.full_like(x, 1.0 / _TINY)
    d = 1.0 / b
    h = d.copy()
    for i in range(1, _CF_MAX_ITER + 1):
        a = -float(i * i)
        b = b + 2.0
        d = a * d + b
        d = np.where(np.abs(d) < _TINY, _TINY, d)
        c = b + a / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        d = 1.0 / d
        delta = c * d
        h = h * delta
        if np.all(np.abs(delta - 1.0) < _CF_TOL):
            return h
    raise ArithmeticError("continued fraction for E1 did not converge")
