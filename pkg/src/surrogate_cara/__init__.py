"""Surrogate-guided covariate-adjusted response-adaptive trial engine."""

__version__ = "0.1.0"
