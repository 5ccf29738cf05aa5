"""Density evolution and error-floor analysis for variable-regular LDPC codes."""

__version__ = "0.1.0"
