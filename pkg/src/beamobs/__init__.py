"""Spectral simulator and estimate-verification harness for the stochastic clamped beam."""

__version__ = "0.1.0"
