"""Checks and Monte Carlo estimates for Gaussian process comparison inequalities."""

__version__ = "0.1.0"
