"""Numerical laboratory for Ginzburg-Landau surface superconductivity on discs."""

__version__ = "0.1.0"
