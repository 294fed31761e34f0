"""Pointlike observables of the Ising model from explicit form factors."""

__version__ = "0.1.0"
