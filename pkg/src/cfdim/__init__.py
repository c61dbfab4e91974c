"""Dimension computations for continued-fraction limsup sets."""

__version__ = "0.1.0"
