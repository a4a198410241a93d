"""Quasi-periodic CMV matrices: cocycles, determinants, spectra and localization experiments."""
__version__ = "0.1.0"
