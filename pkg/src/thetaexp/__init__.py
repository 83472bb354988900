"""Exact theta-expansion dynamics, cylinder geometry and sparse-insertion constructions."""

__version__ = "0.1.0"

from .qfield import FieldSpec, QuadraticNumber, compare_exact, floor_exact, normalize, to_decimal
from .expansion import (
    Cylinder,
    DigitWord,
    adjacent_gap,
    build_cylinder,
    digit_stream,
    gauss_step,
    value_of,
    verify_metric,
    word,
)

__all__ = [
    "FieldSpec",
    "QuadraticNumber",
    "compare_exact",
    "floor_exact",
    "normalize",
    "to_decimal",
    "Cylinder",
    "DigitWord",
    "adjacent_gap",
    "build_cylinder",
    "digit_stream",
    "gauss_step",
    "value_of",
    "verify_metric",
    "word",
]
