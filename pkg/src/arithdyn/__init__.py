"""Arithmetic dynamics over Q: heights, Green functions, exact solvers."""

__version__ = "0.1.0"
