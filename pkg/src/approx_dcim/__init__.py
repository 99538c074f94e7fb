"""Accuracy-constrained co-optimization toolkit for approximate compute-in-memory front-ends."""

__version__ = "0.1.0"
