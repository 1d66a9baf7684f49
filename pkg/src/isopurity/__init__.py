"""Isopurity: statistics of bipartite-entanglement purity for random pure states."""

__version__ = "0.1.0"
