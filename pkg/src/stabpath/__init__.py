"""Numerical quantum cohomology central charges and stability-condition paths
on projective spaces."""

__version__ = "0.1.0"
