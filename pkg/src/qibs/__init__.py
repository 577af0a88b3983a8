"""Quantum identity-based signature simulator."""

__version__ = "0.1.0"
