"""Noise-tolerant correlation search and testing for low-dimensional structure
in black-box functions over Gaussian space."""

__version__ = "0.1.0"
