"""Tempo estimation from solo instrumental audio."""

__version__ = "0.1.0"
