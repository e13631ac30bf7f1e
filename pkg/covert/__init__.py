"""Covert communication over AWGN channels with finite blocklength."""

__version__ = "0.1.0"
