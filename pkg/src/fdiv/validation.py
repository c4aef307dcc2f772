"""Input validation helpers used by the functional API and the estimators."""

from __future__ import annotations

import numpy as np

from .exceptions import DimensionMismatch, DomainError, EmptyDataset


def as_samples(x, *, name: str = "X", dim: int | None = None) -> np.ndarray:
    """Coerce ``x`` to a 2-D float array of shape (n, d).

    1-D input is treated as n scalar samples.  Raises ``EmptyDataset`` for
    zero rows and ``DimensionMismatch`` when ``dim`` is given and disagrees.
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise DimensionMismatch(f"{name} must be 1-D or 2-D, got ndim={arr.ndim}")
    if arr.shape[0] == 0:
        raise EmptyDataset(f"{name} has no rows")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite values")
    if dim is not None and arr.shape[1] != dim:
        raise DimensionMismatch(
            f"{name} has {arr.shape[1]} columns, feature map expects {dim}"
        )
    return arr


def as_vector(x, *, name: str = "x", dim: int | None = None) -> np.ndarray:
    arr = np.asarray(x, dtype=float).ravel()
    if dim is not None and arr.shape[0] != dim:
        raise DimensionMismatch(f"{name} has length {arr.shape[0]}, expected {dim}")
    return arr


def as_square(a, *, name: str = "A", dim: int | None = None) -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise DimensionMismatch(f"{name} is {arr.shape[0]}x{arr.shape[0]}, expected {dim}x{dim}")
    return arr


def as_labels(y, *, k: int, name: str = "labels") -> np.ndarray:
    """Validate integer class labels in {1, ..., k}."""
    arr = np.asarray(y)
    if arr.ndim != 1:
        arr = arr.ravel()
    if arr.shape[0] == 0:
        raise EmptyDataset(f"{name} has no rows")
    ints = arr.astype(int)
    if not np.all(ints == arr):
        raise DimensionMismatch(f"{name} must be integers")
    if ints.min() < 1 or ints.max() > k:
        raise DimensionMismatch(f"{name} must lie in 1..{k}")
    return ints


def symmetrize(a: np.ndarray) -> np.ndarray:
    return (a + a.T) / 2.0
