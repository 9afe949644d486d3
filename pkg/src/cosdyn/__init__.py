"""Weighted translations, cosine operator sequences and their dynamics on
discrete solid function spaces."""

__version__ = "0.1.0"
