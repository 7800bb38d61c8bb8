"""Batch plotting for planted-experiment sweep CSVs."""

__version__ = "0.1.0"
