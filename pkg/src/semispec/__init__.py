"""Semiclassical spectral invariants of Schrodinger operators."""

__version__ = "0.1.0"
