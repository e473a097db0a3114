"""Spatiotemporal wind forecasting with 2D+3D CNNs and pre-training correlation analysis."""

__version__ = "0.1.0"
