"""Dialogue management engine for interactive API search."""

__version__ = "0.1.0"
