"""Input validation helpers shared across the package."""

from __future__ import annotations

import numpy as np


class ValidationError(ValueError):
    """Raised when an input violates a documented contract."""


def require(condition: bool, message: str) -> None:
    if not condition:
        raise ValidationError(message)


def as_float_vector(values, *, name: str = "sequence", allow_empty: bool = False) -> np.ndarray:
    """Coerce to a 1-D float64 array, rejecting empty or non-finite input."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 2 and 1 in arr.shape:
        arr = arr.reshape(-1)
    require(arr.ndim == 1, f"{name} must be one-dimensional")
    if not allow_empty:
        require(arr.size > 0, f"empty {name}")
    require(bool(np.isfinite(arr).all()), f"non-finite value in {name}")
    return arr


def as_float_matrix(values, *, name: str = "matrix") -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    require(arr.ndim == 2, f"{name} must be two-dimensional")
    require(arr.size > 0, f"empty {name}")
    require(bool(np.isfinite(arr).all()), f"non-finite value in {name}")
    return arr


