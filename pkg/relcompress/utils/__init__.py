"""Helpers for I/O, numerics and synthetic data."""
