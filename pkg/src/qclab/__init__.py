"""Numerical laboratory for the spectral geometry of 4D quasi-contact structures."""

__version__ = "0.1.0"
