"""Exact verification toolkit for four prehomogeneous pencil spaces.

Modules: geometry (exact LP and interior-point alternatives), weights
(torus weights in d-coordinates), fields and pencils (pencils, F_x and
their invariants), batch (vectorized F_p evaluation), strata (vanishing
patterns, nonvanishing claims, stability witnesses), certify (exponent
calculus and convergence certificates), cli (the batch runner).
"""

__version__ = "0.1.0"
