"""phaseport: qualitative analysis of 1D/2D autonomous ODE systems.

Parse right-hand sides, locate and classify equilibria (determinant-trace
and sign-only methods), extract null-clines, solve 2x2 linear systems in
closed form, integrate trajectories, detect limit cycles, and scan for
fold and Hopf bifurcations.  A command-line tool (``phaseport``) emits JSON
reports and SVG phase portraits.
"""

__version__ = "0.1.0"

from . import algebra2, corpus, cycles, expr, linsys, phase1d, phase2d  # noqa: F401
