"""Numerical laboratory for Hitchin/semiflat metric asymptotics on the disk model."""

__version__ = "0.1.0"
