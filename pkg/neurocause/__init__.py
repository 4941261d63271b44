"""Causal interpretation of encoding and decoding models of brain activity."""

__version__ = "0.1.0"
