"""Worst-case capacity saturates when the estimation error does not shrink with power.

Run: python3 demos/capacity_ceiling.py
"""

from selcoop import analytic
from selcoop.channel import SystemConfig, derive_stats
from selcoop.simulator import run_sweep

for scaling in ("fixed", "snr_inverse"):
    print(f"estimation error scaling: {scaling}")
    for rho in (1.0, 0.9):
        pts = [(db, SystemConfig.from_profile(2, 10 ** (db / 10), rho=rho, error_scaling=scaling))
               for db in (10.0, 20.0, 30.0, 40.0)]
        res = run_sweep(pts, 100_000, metrics=("capacity",), seed=3)
        sim = "  ".join(f"{r.value:5.2f}" for r in res.rows)
        low = "  ".join(f"{analytic.capacity_bound_per_bandwidth(derive_stats(c)):5.2f}"
                        for _, c in pts)
        print(f"  rho={rho:<4} simulated {sim}   lower bound {low}  bit/s/Hz at 10..40 dB")
