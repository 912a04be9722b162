"""Simulation and verification of the joint limit law of maxima and minima
of complete and incomplete samples from stationary Gaussian sequences."""

__version__ = "0.1.0"
