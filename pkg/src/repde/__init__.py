"""repde: numerical laboratory for a degenerate diffusion law with nonlocal source.

Builds unit-mass solutions of u_t = u lap(u) + u * int |grad u|^2 from the
local flow v_s = v lap(v) via an explicit time change, and verifies the
asymptotic growth laws of the cumulated energy E(t) = int_0^t int |grad u|^2
for algebraic, exponential, and doubly exponential initial decay.
"""

__version__ = "0.1.0"
