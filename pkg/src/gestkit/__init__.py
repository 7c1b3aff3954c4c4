"""Articulatory contour decomposition: guided factor analysis plus a sparse
convolutive-factorization autoencoder, with synthetic data for verification."""

__version__ = "0.1.0"
