"""Automatic detection and decoding of honey bee waggle dances from video."""

__version__ = "0.1.0"
