"""Hierarchical clustering objectives, sketches and approximation schemes."""
