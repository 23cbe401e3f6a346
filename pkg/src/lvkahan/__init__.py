"""Lotka-Volterra tree- and block-graph systems and their Kahan maps, in exact arithmetic."""

__version__ = "0.1.0"
