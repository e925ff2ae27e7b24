"""Hermite/Fourier spectral tools for the linearized non-cutoff Kac equation."""

__version__ = "0.1.0"
