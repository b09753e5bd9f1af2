"""Closed-form ASER bounds against direct quadrature and the high-SNR asymptote.

Two relays, default energy profile, perfect and imperfect channel estimates.
Run: python3 demos/closed_form_bounds.py
"""

from selcoop import analytic, oracle
from selcoop.analytic import BoundKind
from selcoop.channel import SystemConfig, derive_stats

for rho in (1.0, 0.99, 0.9):
    print(f"rho = {rho}")
    print(f"{'dB':>4} {'lower':>11} {'quad':>11} {'upper':>11} {'asymptote':>11}")
    for db in range(0, 41, 10):
        st = derive_stats(SystemConfig.from_profile(2, 10 ** (db / 10), rho=rho))
        lo = analytic.aser_bound(st, 2.0, "lower_aser")
        quad = oracle.aser_by_quadrature(st, 2.0, BoundKind.UPPER_SNR)
        hi = analytic.aser_bound(st, 2.0, "upper_aser")
        asym = analytic.aser_asymptotic(st)
        print(f"{db:4d} {lo:11.4e} {quad:11.4e} {hi:11.4e} {asym:11.4e}")
    print()
