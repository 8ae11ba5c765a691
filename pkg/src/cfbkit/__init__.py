"""Numerical toolkit for upper-triangular Cowen-Douglas shift operators.

Diagonal reproducing kernels on the disk, weighted backward shifts, symbol
and composition operators, curvature and second fundamental forms,
Property (H) criteria, block operator assembly and similarity checks.
"""

__version__ = "0.1.0"

from .errors import CfbError  # noqa: E402,F401
