"""Quasi-isometric embeddings: Weyl patterns, symmetric spaces and Euclidean buildings."""

__version__ = "0.1.0"
