"""Covering structures on finite topological spaces."""

__version__ = "0.1.0"
