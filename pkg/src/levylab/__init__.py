"""Numerical toolkit for the Dirac / Levy-Leblond Hamiltonians and their eps -> 0 limit."""

__version__ = "0.1.0"
