"""Forecaster-aided user association and load balancing."""
__version__ = "0.1.0"
