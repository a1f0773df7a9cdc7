"""Dynamics toolkit for the exponential family e^z + a and Fatou's function."""

__version__ = "0.1.0"
