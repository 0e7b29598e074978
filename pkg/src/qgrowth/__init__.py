"""Numerical laboratory for elliptic systems whose nonlinearity grows quadratically in the gradient.

Modules
-------
field_kernel
    Radial and polynomial vector fields with exact jets, the singular model
    solutions, fundamental solutions and harmonic comparison corpora.
rearrange
    Decreasing rearrangements and Lorentz norms of sampled functions.
quadrature
    Dyadic radial quadrature with divergence detection, spherical caps.
pde_residual
    Pointwise and weak residuals of the model systems, growth constants,
    radial Newton potentials.
regularity_lab
    Morrey and Lorentz decay scans, oscillation, Sobolev membership.
cli
    Command-line front end (``qgrowth``).
"""
from .errors import QGrowthError

__version__ = "0.1.0"

__all__ = ["QGrowthError", "__version__"]
