"""Differential conformance-testing toolkit for X.509 certificate parsers."""

__version__ = "0.1.0"

from .taxonomy import CategorizedError, ErrorCategory  # noqa: F401
from .x509 import LENIENT, STRICT, Certificate, ValidationProfile, parse_certificate  # noqa: F401
