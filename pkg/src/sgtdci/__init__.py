"""Sparse-grid (hyperbolic-cross) truncation of two-electron real-time dynamics."""

__version__ = "0.1.0"
