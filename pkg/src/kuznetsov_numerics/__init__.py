"""Numerical checks for Kloosterman sums, complex-order Bessel transforms and
Kuznetsov-type geometric sides."""

from .errors import NumericsError
from .transforms import STANDARD_V, STANDARD_W, BumpFunction, ConvolutionEvaluator

__all__ = ["NumericsError", "BumpFunction", "ConvolutionEvaluator", "STANDARD_V", "STANDARD_W"]
__version__ = "0.1.0"
