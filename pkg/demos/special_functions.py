"""Q-function and E1 tails next to their asymptotic forms.

Run: python3 demos/special_functions.py
"""

import math

from selcoop import specfun

print(f"{'x':>6} {'Q(x)':>12} {'phi(x)/x':>12}   {'x':>6} {'e^x E1(x)':>12} {'1/x':>10}")
for x in (1.0, 3.0, 6.0, 10.0, 20.0):
    phi = math.exp(-x * x / 2) / math.sqrt(2 * math.pi)
    print(f"{x:6.1f} {specfun.q_function(x):12.4e} {phi / x:12.4e}   "
          f"{x:6.1f} {specfun.exp_e1(x):12.6f} {1 / x:10.6f}")
