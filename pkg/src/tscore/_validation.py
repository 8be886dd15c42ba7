"""Shared input-validation helpers for array-like arguments."""

from __future__ import annotations

import numpy as np


def as_float_vector(values, name: str = "values") -> np.ndarray:
    """Coerce to a contiguous 1-D float64 array, rejecting NaN and infinity."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or infinite entries")
    return np.ascontiguousarray(arr)


def check_equal_length(a: np.ndarray, b: np.ndarray, a_name: str = "x", b_name: str = "y") -> int:
    """Return the common length of two vectors or raise."""
    if a.shape[0] != b.shape[0]:
        raise ValueError(
            f"{a_name} and {b_name} must have equal length, got {a.shape[0]} and {b.shape[0]}"
        )
    return a.shape[0]


def check_positive_int(value: int, name: str, minimum: int = 1) -> int:
    """Validate an integer lower bound and return the value."""
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)
