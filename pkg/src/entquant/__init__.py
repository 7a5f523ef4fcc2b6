"""Finite-data entanglement quantification with Bayesian posteriors over multi-qubit states."""

__version__ = "0.1.0"
