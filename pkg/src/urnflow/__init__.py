"""Generalized urn population processes and their mean-limit simplex dynamics."""

__version__ = "0.1.0"
