"""Norm-violation detection benchmark over simulated household event traces."""

__version__ = "0.1.0"
