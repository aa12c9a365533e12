"""Stabilizer/CSS machinery, exact entropic computations, hashing-based
distillation simulations, and QKD key-rate solvers."""

__version__ = "0.1.0"
