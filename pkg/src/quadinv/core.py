"""Core matrix types and the two semirings everything else is built on.

Two kinds of constraint matrices circulate in this package:

* binary patterns -- ``{0,1}`` matrices describing which controller/plant
  links exist, combined with OR/AND (boolean semiring);
* delay matrices -- nonnegative extended reals (``inf`` allowed, meaning
  "no connection"), combined with min/+ (tropical semiring).

Matrices are plain ``numpy`` arrays.  The constructors below validate and
freeze them (read-only views), so every operation in the package stays pure
and arrays can be shared between threads.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "ShapeError",
    "binary_pattern",
    "delay_matrix",
    "bin_add",
    "bin_mul",
    "nnz",
    "sparsity_to_delay",
    "delay_to_sparsity",
]


class ShapeError(ValueError):
    """Operands have incompatible shapes."""


def _freeze(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def binary_pattern(obj) -> np.ndarray:
    """Validate *obj* as a binary pattern and return it as a frozen uint8 array.

    Every entry must be exactly 0 or 1 and the matrix must be 2-D with at
    least one row and one column.
    """
    a = np.asarray(obj)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ShapeError(f"binary pattern must be a non-empty 2-D matrix, got shape {a.shape}")
    b = a.astype(np.uint8, copy=True)
    if not np.array_equal(b, a) or b.max(initial=0) > 1:
        raise ValueError("binary pattern entries must be exactly 0 or 1")
    return _freeze(b)


def delay_matrix(obj) -> np.ndarray:
    """Validate *obj* as a delay matrix and return it as a frozen float64 array.

    Entries are nonnegative; ``inf`` is legal and stands for a missing
    connection (a zero block has infinite delay).  ``nan`` is rejected.
    """
    a = np.asarray(obj, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ShapeError(f"delay matrix must be a non-empty 2-D matrix, got shape {a.shape}")
    d = a.copy()
    if np.isnan(d).any():
        raise ValueError("delay matrix entries must not be NaN")
    if (d < 0).any():
        raise ValueError("delay matrix entries must be >= 0")
    return _freeze(d)


def _check_same_shape(x: np.ndarray, y: np.ndarray) -> None:
    if x.shape != y.shape:
        raise ShapeError(f"shape mismatch: {x.shape} vs {y.shape}")


def bin_add(x, y) -> np.ndarray:
    """Entrywise OR of two binary patterns of the same shape."""
    xb, yb = binary_pattern(x), binary_pattern(y)
    _check_same_shape(xb, yb)
    return _freeze(np.bitwise_or(xb, yb))


def bin_mul(x, y) -> np.ndarray:
    """Boolean matrix product (OR of ANDs) of two binary patterns."""
    xb, yb = binary_pattern(x), binary_pattern(y)
    if xb.shape[1] != yb.shape[0]:
        raise ShapeError(f"inner dimensions disagree: {xb.shape} by {yb.shape}")
    prod = (xb.astype(np.int64) @ yb.astype(np.int64)) > 0
    return _freeze(prod.astype(np.uint8))


def nnz(x) -> int:
    """Number of 1-entries in a binary pattern."""
    return int(binary_pattern(x).sum())


def sparsity_to_delay(x, scale: float) -> np.ndarray:
    """Recast a sparsity pattern as delays: a link costs 0, a missing link costs *scale*.

    Any ``scale > 0`` gives an equivalent constraint; the value only sets
    the unit in which "forbidden" is expressed.  ``scale`` may be ``inf``.
    """
    if not scale > 0:
        raise ValueError(f"scale must be > 0, got {scale}")
    xb = binary_pattern(x)
    out = np.where(xb == 1, 0.0, float(scale))
    return _freeze(out)


def delay_to_sparsity(d, threshold: float) -> np.ndarray:
    """Inverse of :func:`sparsity_to_delay`: delays below *threshold* become links."""
    if not threshold > 0:
        raise ValueError(f"threshold must be > 0, got {threshold}")
    dm = delay_matrix(d)
    return _freeze((dm < threshold).astype(np.uint8))
