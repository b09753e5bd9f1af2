"""Brute-force numerical references for checking the closed forms.

Nothing here calls the closed-form evaluators except where an integrand is
explicitly the closed-form density under test.  The max-of-exponentials
density is rebuilt from the product rule, the Gaussian tail comes from
``math.erfc`` and the exponential integral from direct quadrature.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate as _sp_integrate
from scipy import special as _sp_special

from . import analytic


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""


@dataclass(frozen=True)
class QuadratureSpec:
    epsabs: float = 1e-13
    epsrel: float = 1e-12
    limit: int = 500
    transform: str = "none"  # or "exp_substitution" for [a, inf)
    scale: float = 1.0

    def __post_init__(self):
        if self.epsabs <= 0 or self.epsrel <= 0:
            raise ValueError("tolerances must be > 0")
        if self.transform not in ("none", "exp_substitution"):
            raise ValueError(f"unknown transform {self.transform!r}")


def integrate(f, a, b, spec=None):
    """Adaptive integral of scalar ``f`` over ``[a, b]``; returns ``(value, error)``.

    ``exp_substitution`` maps ``[a, inf)`` onto ``(0, 1]`` through
    ``x = a - scale * ln(u)``, which suits exponentially decaying tails.
    Raises :class:`QuadratureError` instead of returning a value that missed
    its tolerance.
    """
    spec = spec or QuadratureSpec()
    if spec.transform == "exp_substitution":
        if not math.isinf(b):
            raise ValueError("exp_substitution needs an infinite upper limit")
        L = spec.scale

        def g(u):
            return f(a - L * math.log(u)) * L / u

        lo, hi, func = 0.0, 1.0, g
    else:
        lo, hi, func = a, b, f
    with warnings.catch_warnings():
        warnings.simplefilter("error", _sp_integrate.IntegrationWarning)
        try:
            value, err = _sp_integrate.quad(func, lo, hi, epsabs=spec.epsabs,
                                            epsrel=spec.epsrel, limit=spec.limit)
        except _sp_integrate.IntegrationWarning as exc:
            raise QuadratureError(str(exc)) from exc
    if not math.isfinite(value) or err > 10 * max(spec.epsabs, spec.epsrel * abs(value)):
        raise QuadratureError(f"error estimate {err:.3g} above tolerance")
    return value, err


def integrate_positive_axis(f, scales, epsabs=1e-13, epsrel=1e-12):
    """Integrate ``f`` over ``[0, inf)`` given the length scales it varies on.

    The axis is cut geometrically from the smallest to the largest scale so
    each panel sees a smooth integrand; the remaining tail goes through the
    exponential substitution.
    """
    scales = [float(x) for x in scales if x > 0]
    lo_scale, hi_scale = min(scales), max(scales)
    cuts = [0.0]
    x = lo_scale / 8.0
    while x < 60.0 * hi_scale:
        cuts.append(x)
        x *= 4.0
    cuts.append(60.0 * hi_scale)
    spec = QuadratureSpec(epsabs=epsabs, epsrel=epsrel)
    total = err = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        v, e = integrate(f, a, b, spec)
        total += v
        err += e
    tail = QuadratureSpec(epsabs=epsabs, epsrel=epsrel, transform="exp_substitution",
                          scale=hi_scale)
    v, e = integrate(f, cuts[-1], math.inf, tail)
    return total + v, err + e


def q_reference(x):
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def _scales(stats, kind, extra=()):
    s, _ = analytic.subset_rates(stats, kind)
    return [float(stats.mu_bar), 1.0 / float(s.max()), 1.0 / float(s.min()), *extra]


def aser_by_quadrature(stats, k_mod=2.0, kind=analytic.BoundKind.UPPER_SNR):
    """``integral Q(sqrt(k gamma)) f(gamma) dgamma`` with ``f`` the bounded-SNR density."""
    def integrand(g):
        return q_reference(math.sqrt(k_mod * g)) * analytic.pdf_gamma_bound(stats, kind, g)

    value, _ = integrate_positive_axis(integrand, _scales(stats, kind, (1.0 / k_mod,)))
    return value


def capacity_by_quadrature(stats, kind=analytic.BoundKind.UPPER_SNR, prelog=0.5):
    """``prelog * integral log2(1 + gamma) f(gamma) dgamma`` over the bounded-SNR density."""
    def integrand(g):
        return math.log2(1.0 + g) * analytic.pdf_gamma_bound(stats, kind, g)

    value, _ = integrate_positive_axis(integrand, _scales(stats, kind, (1.0,)),
                                       epsabs=1e-12, epsrel=1e-11)
    return prelog * value


def pdf_normalization(stats, kind=analytic.BoundKind.UPPER_SNR):
    value, _ = integrate_positive_axis(
        lambda g: analytic.pdf_gamma_bound(stats, kind, g), _scales(stats, kind))
    return value


def max_exponential_pdf(rates, x):
    """Density of ``max_i X_i`` with ``X_i ~ Exp(rate_i)`` by the product rule."""
    rates = np.asarray(rates, dtype=float)
    f = rates * np.exp(-rates * x)
    cdf = -np.expm1(-rates * x)
    total = 0.0
    for i in range(rates.size):
        total += f[i] * np.prod(np.delete(cdf, i))
    return float(total)


def pdf_by_convolution(stats, kind, gamma):
    """Bounded-SNR density as the numerical convolution of the direct-path and max densities."""
    rates = 1.0 / np.asarray(stats.beta, dtype=float)
    if analytic.BoundKind(kind) is analytic.BoundKind.LOWER_SNR:
        rates = 2.0 * rates
    mu = float(stats.mu_bar)
    if gamma <= 0:
        return 0.0

    def integrand(x):
        return math.exp(-(gamma - x) / mu) / mu * max_exponential_pdf(rates, x)

    value, _ = integrate(integrand, 0.0, gamma, QuadratureSpec(epsabs=1e-14, epsrel=1e-11))
    return value


def exp_e1_reference(x):
    """``exp(x) E1(x) = integral_0^inf exp(-u) / (x + u) du`` by quadrature."""
    value, _ = integrate(lambda u: math.exp(-u) / (x + u), 0.0, math.inf,
                         QuadratureSpec(epsabs=1e-15, epsrel=1e-13,
                                        transform="exp_substitution", scale=1.0))
    return value


def derivative_at(f, x0, order, step, levels=4):
    """Central finite-difference derivative with Richardson extrapolation.

    Each level halves ``step``; the second-order error expansion in ``h**2``
    is eliminated level by level.
    """
    coeffs = [(-1) ** j * math.comb(order, j) for j in range(order + 1)]

    def central(h):
        # order-n central difference on the grid x0 + (n/2 - j) h
        return sum(c * f(x0 + (order / 2.0 - j) * h)
                   for j, c in enumerate(coeffs)) / h**order

    table = [central(step / 2**i) for i in range(levels)]
    for level in range(1, levels):
        factor = 4.0**level
        table = [(factor * table[i + 1] - table[i]) / (factor - 1.0)
                 for i in range(len(table) - 1)]
    return table[0]


def ser_single_relay_perfect_csi(gbar_sd, gbar_si, gbar_id, k_mod=2.0):
    """Exact average SER of a one-relay AF link with perfect CSI.

    The total SNR is ``G + X Y / (X + Y + 1)`` with independent exponential
    ``G, X, Y``.  The average over ``G`` has the closed form
    ``Q(sqrt(k h)) - sqrt(k / (2c)) / 2 * erfcx(sqrt(c h)) * exp(-k h / 2)``
    with ``c = k/2 + 1/gbar_sd``; the remaining two averages are done by
    quadrature on ``(0, 1)**2`` after ``X = -gbar_si ln u``.
    """
    c = 0.5 * k_mod + 1.0 / gbar_sd
    amp = 0.5 * math.sqrt(k_mod / (2.0 * c))

    def avg_over_direct(h):
        return (q_reference(math.sqrt(k_mod * h))
                - amp * _sp_special.erfcx(math.sqrt(c * h)) * math.exp(-0.5 * k_mod * h))

    def integrand(v, u):
        x = -gbar_si * math.log(u)
        y = -gbar_id * math.log(v)
        return avg_over_direct(x * y / (x + y + 1.0))

    with warnings.catch_warnings():
        warnings.simplefilter("error", _sp_integrate.IntegrationWarning)
        value, _ = _sp_integrate.dblquad(integrand, 0.0, 1.0, 0.0, 1.0,
                                         epsabs=1e-11, epsrel=1e-9)
    return value


def mean_with_stderr(samples):
    samples = np.asarray(samples, dtype=float)
    n = samples.size
    return float(samples.mean()), float(samples.std(ddof=1) / math.sqrt(n))
