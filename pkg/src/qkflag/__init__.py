"""Quantum K-theory rings of partial flag varieties: presentations, Bethe
spectra and J-function checks."""

__version__ = "0.1.0"
