"""Reduced-dynamics full counting statistics with transfer tensors."""

__version__ = "0.1.0"
