"""Nonlinearity-parameter tomography from multiharmonic boundary data."""

__version__ = "0.3.0"

from .errors import TomoError  # noqa: F401
