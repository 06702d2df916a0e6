"""Semantic layers over web-archive collections."""

__version__ = "0.1.0"
