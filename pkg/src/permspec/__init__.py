"""Sums of random permutation matrices: sampling, exact traces, limit fields and spectra."""

__version__ = "0.1.0"
