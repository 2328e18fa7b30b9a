"""Exact computations in the Connes-Kreimer Hopf algebra of rooted trees."""

__version__ = "0.1.0"
