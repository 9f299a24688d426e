"""Computational certificates for the lower bound in Nehari's theorem on the polydisc."""

__all__ = ["__version__"]

__version__ = "0.1.0"
