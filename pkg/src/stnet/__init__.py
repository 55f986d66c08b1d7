"""Spatiotemporal violence-detection classifiers on a small numpy framework."""

__version__ = "0.1.0"
