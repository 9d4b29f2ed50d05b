"""Numerical laboratory for commutative Banach algebras generated by
Toeplitz operators with quasi-radial and pseudo-homogeneous symbols on
weighted Bergman spaces over the unit ball.

Everything is computed at an explicit finite truncation of the basis;
degree caps are always configuration, never inferred.
"""

__version__ = "0.1.0"

from .errors import ToeplitzError

__all__ = ["ToeplitzError", "__version__"]
