"""Positive definite nonparametric regression and covariance estimation."""

__version__ = "0.1.0"
