"""Spectral calculus for Bessel-Grushin operators."""

__version__ = "0.1.0"
