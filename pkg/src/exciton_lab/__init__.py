"""Numerical laboratory for noise-assisted excitation transport, star-to-chain mapping of
system–environment models, and classicality tests of reconstructed quantum channels.
"""

__version__ = "0.1.0"
