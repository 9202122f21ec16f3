"""crlab: cognitive-radio cooperative relay and interference-aligned streaming lab.

Analytical models (cooperative sensing, relay decoding rates, p-persistent
CSMA capacity), a slotted Monte Carlo simulator cross-checking them, and an
interference-alignment video optimizer (null-space reformulation, distributed
primal-dual solver, greedy channel allocator).
"""

__version__ = "0.1.0"

from . import access, allocation, channel, ia, relay, sensing, simulator, solver, video  # noqa: F401
