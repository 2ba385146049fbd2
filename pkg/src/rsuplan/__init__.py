"""Minimal millimetre-wave road-side-unit placement on city maps."""

from ._backend import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
