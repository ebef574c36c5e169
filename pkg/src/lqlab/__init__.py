"""Numerical lab for central values of Dirichlet L-functions in the q-aspect."""

__version__ = "0.1.0"
