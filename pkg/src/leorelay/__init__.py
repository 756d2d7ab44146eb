"""Downlink performance of CubeSats through ground stations or co-planar relay satellites."""

__version__ = "0.1.0"
