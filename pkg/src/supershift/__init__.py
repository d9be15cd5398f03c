"""Weighted backward shift series, their right inverses and supercyclicity checks."""

from .space import (
    BiorthSystem,
    ConstantOne,
    Geometric,
    LogMagnitude,
    SparseVec,
    arithmetic,
    basis,
    get_mode,
    set_mode,
)
from .shiftops import OperatorSeries, apply_series, apply_shift, apply_shift_pow

__version__ = "0.1.0"

__all__ = [
    "BiorthSystem",
    "ConstantOne",
    "Geometric",
    "LogMagnitude",
    "SparseVec",
    "OperatorSeries",
    "apply_series",
    "apply_shift",
    "apply_shift_pow",
    "arithmetic",
    "basis",
    "get_mode",
    "set_mode",
]
