"""Model-based safety analysis of synchronous parallel systems."""

__version__ = "0.1.0"
