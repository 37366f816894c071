"""Alloy-type random Schroedinger operators on metric graphs.

Finite-element spectra with vertex conditions, eigenvalue comparison checks,
Monte Carlo interval counts and the integrated density of states on lattice
boxes.
"""
__version__ = "0.1.0"
