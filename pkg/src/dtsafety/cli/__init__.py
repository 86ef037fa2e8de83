"""CLI package for dtsafety."""

from .main import main

__all__ = ["main"]
