"""Categorical synthetic data: Bayesian-network, privacy-noised and copula
generators, evaluation metrics, method ranking and exact inference."""

__version__ = "0.1.0"
