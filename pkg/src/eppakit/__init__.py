"""Finite witnesses for the extension property for partial automorphisms."""

__version__ = "0.1.0"
