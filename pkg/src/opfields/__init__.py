"""Exact computations with formal monoids over fields with operators.

Layers: scalars and linear algebra, finite algebras and their modules,
formal-monoid towers with actions, jet spaces, and prolongations of
difference modules with their E-structure.
"""
from __future__ import annotations

from .report import Report, VerificationError
from .scalars import DepthError, Field, OperatorField, parse_field

__all__ = ["DepthError", "Field", "OperatorField", "Report", "VerificationError", "parse_field"]
__version__ = "0.1.0"
