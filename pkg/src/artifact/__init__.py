"""Exact toolkit for constrained Hamiltonian mechanics on graded phase spaces."""

__version__ = "0.1.0"
