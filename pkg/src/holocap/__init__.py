"""Numerical logarithmic capacity of planar sets under holomorphic motions."""
__version__ = "0.1.0"
