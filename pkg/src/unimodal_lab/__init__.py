"""Numerical laboratory for first-return and transfer maps of S-unimodal interval maps."""

__version__ = "0.1.0"
