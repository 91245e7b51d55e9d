"""Numerical laboratory for stationary fronts of degenerate Nagumo equations."""

__version__ = "0.1.0"
