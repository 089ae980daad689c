"""Lippmann-Schwinger scattering for the Schrodinger and Dirac operators."""

__version__ = "0.1.0"
