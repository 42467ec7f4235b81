"""Desk-scale simulator for two-dimensional Ginzburg-Landau vortex pinning
by small diluted impurities."""

__version__ = "0.1.0"
