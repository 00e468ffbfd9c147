"""Weighted BMO estimates on dyadic grids: maximal functions, weights, sparse
operators, extrapolation and Calderon-Zygmund bounds, with checkable reports."""

from .grid import Cube, DyadicGrid, GridFunction
from .report import VerificationReport

__version__ = "0.1.0"

__all__ = ["Cube", "DyadicGrid", "GridFunction", "VerificationReport", "__version__"]
