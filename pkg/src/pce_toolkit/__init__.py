"""Pixel-wise coded exposure simulator, reconstruction and detection-evaluation toolkit."""

__all__ = ["__version__"]

__version__ = "0.1.0"
