"""Desk-scale laboratory for cross-lingual representation similarity."""

__version__ = "0.1.0"
