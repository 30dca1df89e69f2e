"""Simulation and numerics for the two-parameter Poisson-Dirichlet family."""

__version__ = "0.1.0"
