"""Averaged Gross-Zagier kernels, oldform bounds and nonvanishing certificates
for newforms of level p^2 twisted by imaginary quadratic theta series."""

__version__ = "0.1.0"
