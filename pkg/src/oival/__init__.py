"""Omission-interval constructions, clopen covers and selection procedures on P(N)."""

__version__ = "0.1.0"
