"""Numerical certification lab for a high-dimensional wave-system blowup construction."""

__version__ = "0.1.0"
