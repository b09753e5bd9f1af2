"""Selection amplify-and-forward relaying under imperfect channel estimation.

Closed-form performance bounds (:mod:`selcoop.analytic`), a symbol-level
Monte Carlo simulator (:mod:`selcoop.simulator`), numerical-integration
references (:mod:`selcoop.oracle`) and an experiment driver
(:mod:`selcoop.experiment`, :mod:`selcoop.cli`).
"""

__version__ = "0.1.0"

from . import analytic, channel, oracle, simulator, specfun  # noqa: E402,F401
from .channel import ErrorScaling, LinkStats, SystemConfig, derive_stats  # noqa: E402,F401
