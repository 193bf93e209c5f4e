"""Variational quantum linear solver for finite-difference heat conduction,
on a dense statevector simulator."""

__version__ = "0.1.0"
