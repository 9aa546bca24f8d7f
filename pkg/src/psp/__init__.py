"""Prolog Server Pages: HTML documents with embedded Prolog chunks."""

__version__ = "0.1.0"
