"""Outcome-directed scenario generation with Bayesian optimisation and Gaussian mixtures."""

__version__ = "0.1.0"
