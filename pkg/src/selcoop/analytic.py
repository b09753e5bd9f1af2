"""Closed-form bounds for selection amplify-and-forward with imperfect CSI.

The total SNR is bracketed by ``gamma_lb <= gamma_r <= gamma_ub`` where each
bound is the direct-path SNR (exponential, mean ``mu_bar``) plus the maximum
of ``M`` independent exponential relay terms with means ``beta_i`` (upper)
or ``beta_i / 2`` (lower).  Inclusion-exclusion over the nonempty relay
subsets turns every statistic of the bounded SNR into a finite sum; each
subset contributes a rate ``s`` (sum of ``1/beta_i`` over the subset) and a
sign ``(-1)**(p+1)`` for a subset of size ``p``.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import mpmath
import numpy as np

from .specfun import exp_e1

MAX_RELAYS = 24
# |mu_bar * s - 1| below this switches a term to its analytic limit
SINGULAR_TOL = 1e-9


class BoundKind(str, Enum):
    UPPER_SNR = "upper_snr"
    LOWER_SNR = "lower_snr"


class BoundParams(NamedTuple):
    """Minimal stand-in for :class:`~selcoop.channel.LinkStats`.

    The closed forms only read ``mu_bar`` and ``beta``.
    """

    mu_bar: float
    beta: np.ndarray


@dataclass(frozen=True)
class SubsetTerm:
    subset_mask: int
    subset_size: int
    s: float
    sign: int


def _rates(stats, kind):
    kind = BoundKind(kind)
    beta = np.atleast_1d(np.asarray(stats.beta, dtype=float))
    if beta.size > MAX_RELAYS:
        raise ValueError(f"at most {MAX_RELAYS} relays supported, got {beta.size}")
    if np.any(beta <= 0) or stats.mu_bar <= 0:
        raise ValueError("beta and mu_bar must be > 0")
    rates = 1.0 / beta
    if kind is BoundKind.LOWER_SNR:
        rates = 2.0 * rates
    return rates


def subset_rates(stats, kind=BoundKind.UPPER_SNR):
    """Arrays ``(s, sign)`` over all nonempty relay subsets, in bitmask order."""
    rates = _rates(stats, kind)
    s = np.zeros(1)
    size = np.zeros(1, dtype=np.int64)
    for r in rates:
        s = np.concatenate([s, s + r])
        size = np.concatenate([size, size + 1])
    s, size = s[1:], size[1:]
    sign = np.where(size % 2 == 1, 1.0, -1.0)
    return s, sign


def enumerate_subset_terms(stats, kind=BoundKind.UPPER_SNR):
    s, sign = subset_rates(stats, kind)
    return [SubsetTerm(subset_mask=mask, subset_size=bin(mask).count("1"),
                       s=float(s[mask - 1]), sign=int(sign[mask - 1]))
            for mask in range(1, len(s) + 1)]


def _split(stats, kind):
    # with a = 1/mu_bar every term carries a*s/(s - a) = s/(mu_bar*s - 1)
    s, sign = subset_rates(stats, kind)
    mu = float(stats.mu_bar)
    a = 1.0 / mu
    delta = s - a
    singular = np.abs(mu * s - 1.0) < SINGULAR_TOL
    return mu, a, s, sign, singular, np.where(singular, 1.0, delta)


def _exp_divided_difference(a, s, delta, g):
    """``(exp(-a g) - exp(-s g)) / (s - a)`` for ``delta = s - a``.

    Written as ``exp(-min(a, s) g) * (1 - exp(-|delta| g)) / |delta|`` so it
    neither cancels for small ``delta`` nor overflows for large ``g``.
    """
    d = np.abs(delta)
    return np.exp(-np.minimum(a, s) * g) * (-np.expm1(-d * g) / d)


def pdf_gamma_bound(stats, kind, gamma):
    """Density of the bounded total SNR at ``gamma``."""
    mu, a, s, sign, singular, delta = _split(stats, kind)
    g = np.asarray(gamma, dtype=float)[..., None]
    # s/(mu s - 1) (e^{-a g} - e^{-s g})
    regular = a * s * _exp_divided_difference(a, s, delta, g)
    limit = s**2 * g * np.exp(-s * g)
    out = np.sum(sign * np.where(singular, limit, regular), axis=-1)
    return out if out.ndim else float(out)


def cdf_gamma_bound(stats, kind, gamma):
    """Distribution function of the bounded total SNR at ``gamma``."""
    mu, a, s, sign, singular, delta = _split(stats, kind)
    g = np.asarray(gamma, dtype=float)[..., None]
    # 1 + e^{-s g}/(mu s - 1) - mu s e^{-a g}/(mu s - 1)
    regular = -np.expm1(-a * g) - a * _exp_divided_difference(a, s, delta, g)
    limit = 1.0 - np.exp(-s * g) - s * g * np.exp(-s * g)
    out = np.sum(sign * np.where(singular, limit, regular), axis=-1)
    return out if out.ndim else float(out)


def _kind_for(which, lower_name, upper_name):
    """Lower performance bounds come from the upper SNR bound and vice versa."""
    if which == lower_name:
        return BoundKind.UPPER_SNR
    if which == upper_name:
        return BoundKind.LOWER_SNR
    raise ValueError(f"which must be {lower_name!r} or {upper_name!r}, got {which!r}")


def aser_bound(stats, k_mod=2.0, which="lower_aser"):
    """Average symbol error rate bound ``E[Q(sqrt(k gamma))]`` over a bounded SNR.

    ``lower_aser`` averages over the upper SNR bound, ``upper_aser`` over the
    lower one.  Per subset term the ASER closed form needs
    ``s/(mu s - 1) * (mu r(a) - r(s)/s)`` with ``r(x) = sqrt(c/(x + c))``,
    ``c = k/2``; it is evaluated as ``r(a) + a * (r(a) - r(s)) / (s - a)``
    with the divided difference of ``r`` written out algebraically, which is
    exact at and near ``mu s = 1``.

    The alternating subset sum leaves about 1e-16 absolute accuracy in double
    precision; results below 1e-6 are recomputed with mpmath so that high-SNR
    values keep their relative accuracy.
    """
    kind = _kind_for(which, "lower_aser", "upper_aser")
    mu, a, s, sign, singular, delta = _split(stats, kind)
    c = 0.5 * k_mod
    r_a = math.sqrt(c / (a + c))
    r_s = np.sqrt(c / (s + c))
    divided = r_a * r_s / (math.sqrt(c) * (np.sqrt(s + c) + math.sqrt(a + c)))
    total = np.sum(sign * (r_a + a * divided))
    value = float(0.5 - 0.5 * total)
    if value < _EXTENDED_BELOW and s.size <= _EXTENDED_MAX_TERMS:
        # the alternating sum cancels down to ~1e-16 absolute; redo it in extended precision
        value = _aser_extended(stats.mu_bar, np.atleast_1d(stats.beta), kind, k_mod)
    return value


_EXTENDED_BELOW = 1e-6
_EXTENDED_MAX_TERMS = 4095


def _aser_extended(mu_bar, beta, kind, k_mod, dps=40):
    """Same closed form as :func:`aser_bound`, summed with ``dps`` significant digits.

    Subset sums are rebuilt from the exact ``beta_i`` so rounding of ``s`` does
    not leak into the cancelling sum.  Precision is raised until the result
    keeps at least 20 significant digits.
    """
    while True:
        with mpmath.workdps(dps):
            scale = 2 if kind is BoundKind.LOWER_SNR else 1
            rates = [scale / mpmath.mpf(float(b)) for b in beta]
            c = mpmath.mpf(k_mod) / 2
            a = 1 / mpmath.mpf(mu_bar)
            r_a = mpmath.sqrt(c / (a + c))
            sa = mpmath.sqrt(a + c)
            sums, signs = [mpmath.mpf(0)], [-1]
            for r in rates:
                sums += [x + r for x in sums]
                signs += [-g for g in signs]
            total = mpmath.mpf(0)
            for x, g in zip(sums[1:], signs[1:]):
                r_s = mpmath.sqrt(c / (x + c))
                total += g * (r_a + a * r_a * r_s / (mpmath.sqrt(c) * (mpmath.sqrt(x + c) + sa)))
            value = mpmath.mpf(0.5) - total / 2
            if value > 0 and mpmath.log10(value) > 20 - dps:
                return float(value)
        dps *= 2
        if dps > 1000:
            return float(value)


def _double_factorial_odd(n):
    return math.prod(2 * m - 1 for m in range(1, n + 1))


def aser_asymptotic(stats, k_mod=2.0, which="lower_aser"):
    """High-SNR asymptote of :func:`aser_bound`.

    The bounded SNR density behaves as ``(1/mu_bar) * prod(rates) * gamma**M``
    near zero, so the ASER tends to
    ``(2M+1)!! / (2 (M+1) k**(M+1)) * (1/mu_bar) * prod(rates)``.  The rates
    are ``1/beta_i`` for the lower ASER and ``2/beta_i`` for the upper ASER,
    which makes the upper asymptote ``2**M`` times the lower one.
    """
    kind = _kind_for(which, "lower_aser", "upper_aser")
    rates = _rates(stats, kind)
    m = rates.size
    const = _double_factorial_odd(m + 1) / (2.0 * (m + 1) * k_mod ** (m + 1))
    return float(const / stats.mu_bar * np.prod(rates))


def pdf_leading_derivative(stats, kind=BoundKind.UPPER_SNR):
    """``M``-th derivative of the bounded-SNR density at zero; lower orders vanish."""
    rates = _rates(stats, kind)
    return float(math.factorial(rates.size) / stats.mu_bar * np.prod(rates))


def outage_threshold(rate):
    if rate <= 0:
        raise ValueError("rate must be > 0")
    return 2.0 ** (2.0 * rate) - 1.0


def outage_bound(stats, rate=1.0, which="upper_outage"):
    """Outage probability bound ``P(gamma <= 2**(2R) - 1)`` over a bounded SNR."""
    kind = _kind_for(which, "lower_outage", "upper_outage")
    return float(cdf_gamma_bound(stats, kind, outage_threshold(rate)))


def capacity_bound_per_bandwidth(stats, which="lower_capacity", prelog=0.5):
    """Average capacity per unit bandwidth over a bounded SNR, in bit/s/Hz.

    Returns ``prelog * E[log2(1 + gamma)]`` with ``prelog = 1/2`` for the two
    time slots of one relayed symbol.  ``lower_capacity`` averages over the
    lower SNR bound and is a lower bound on the worst-case capacity;
    ``upper_capacity`` averages over the upper SNR bound.
    """
    kind = {"lower_capacity": BoundKind.LOWER_SNR,
            "upper_capacity": BoundKind.UPPER_SNR}.get(which)
    if kind is None:
        raise ValueError(f"which must be 'lower_capacity' or 'upper_capacity', got {which!r}")
    mu, a, s, sign, singular, delta = _split(stats, kind)
    f_s = exp_e1(s)
    # a s (L(a) - L(s)) / (s - a) with L(x) = e^x E1(x) / x
    regular = (a * s / delta) * (exp_e1(a) / a - f_s / s)
    near = np.abs(delta) < _TAYLOR_BAND * s
    if np.any(near):
        regular = np.where(near, _capacity_taylor(s, delta, f_s), regular)
    limit = 1.0 + (1.0 - s) * f_s
    total = np.sum(sign * np.where(singular, limit, regular))
    return float(prelog * total / math.log(2.0))


_TAYLOR_BAND = 1e-6


def _capacity_taylor(s, delta, f_s):
    # L(s - d) - L(s) = -L'(s) d + L''(s) d^2 / 2, using (e^x E1)' = e^x E1 - 1/x
    f1 = f_s - 1.0 / s
    d1 = (s * f_s - 1.0 - f_s) / s**2
    d2 = ((f_s + s * f1 - f1) * s**2 - 2.0 * s * (s * f_s - 1.0 - f_s)) / s**4
    return (s - delta) * s * (0.5 * d2 * delta - d1)


def diversity_prediction(cfg):
    """Predicted diversity order: ``M + 1`` unless a fixed estimation error floors it to 0."""
    from .channel import ErrorScaling

    if cfg.perfect_csi or cfg.error_scaling is ErrorScaling.SNR_INVERSE:
        return float(cfg.relay_count + 1)
    return 0.0


def estimate_slope(points):
    """Negated least-squares slope of ``log10(metric)`` against ``snr_db / 10``."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
        raise ValueError("need at least 3 (snr_db, metric) points")
    if np.any(pts[:, 1] <= 0) or np.any(~np.isfinite(pts)):
        raise ValueError("metric values must be finite and > 0")
    slope = np.polyfit(pts[:, 0] / 10.0, np.log10(pts[:, 1]), 1)[0]
    return float(-slope)
