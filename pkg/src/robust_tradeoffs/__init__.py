"""Optimal adversarially robust classifiers for Gaussian mixtures."""

from .errors import NumericalFault, PreconditionError

__all__ = ["NumericalFault", "PreconditionError"]
__version__ = "0.1.0"
