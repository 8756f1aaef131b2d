"""Compile-time parallelization of loops with subscripted subscripts."""

__version__ = "0.1.0"
