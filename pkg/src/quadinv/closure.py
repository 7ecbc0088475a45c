"""Closest quadratically invariant sparsity superset.

The superset is the limit of the monotone fixed-point sequence

    Z_0 = K,    Z_{m+1} = Z_m + Z_m G Z_m      (boolean algebra)

which adds a direct link wherever an indirect 3-hop route exists.  The limit
is reached after at most ceil(log2 n) productive steps (n = min of the two
dimensions), is the unique minimum-cardinality pattern that both contains K
and satisfies Z G Z <= Z, and can be cross-checked against the closed-form
term sum K (G K)^0 + ... + K (G K)^{n-1}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import ShapeError, binary_pattern

__all__ = ["ClosureTrace", "closest_superset", "term_expansion", "minimal_term_count"]


@dataclass(frozen=True)
class ClosureTrace:
    """Iterates of the fixed-point run, ending with the confirming repeat.

    ``iterates[-1] == iterates[-2]`` always holds (the step that certified
    the fixed point is kept), and ``iterations_used`` counts the productive
    steps, so ``len(iterates) == iterations_used + 2``.
    """

    iterates: tuple[np.ndarray, ...]
    iterations_used: int
    added_links: tuple[tuple[int, int], ...]


def _conformant(kb: np.ndarray, gb: np.ndarray) -> None:
    nu, ny = kb.shape
    if gb.shape != (ny, nu):
        raise ShapeError(
            f"plant pattern must be {(ny, nu)} for a {kb.shape} controller, got {gb.shape}"
        )


def closest_superset(kmat, g) -> tuple[np.ndarray, ClosureTrace]:
    """Smallest QI sparsity pattern containing *kmat*, with its iteration trace."""
    kb = binary_pattern(kmat)
    gb = binary_pattern(g)
    _conformant(kb, gb)
    bound = math.ceil(math.log2(min(kb.shape))) if min(kb.shape) > 1 else 0
    iterates = [kb]
    z = kb
    iterations = 0
    while True:
        step = kernels.bool_matmul(kernels.bool_matmul(z, gb), z)
        nxt = np.bitwise_or(z, step)
        iterates.append(nxt)
        if np.array_equal(nxt, z):
            break
        z = nxt
        iterations += 1
        if iterations > bound:  # guaranteed unreachable; trips only on a kernel bug
            raise AssertionError("superset closure exceeded its iteration bound")
    added = np.argwhere((z == 1) & (kb == 0))
    links = tuple((int(r) + 1, int(c) + 1) for r, c in added)
    z = z.copy()
    z.flags.writeable = False
    return z, ClosureTrace(
        iterates=tuple(iterates), iterations_used=iterations, added_links=links
    )


def term_expansion(kmat, g, m: int) -> np.ndarray:
    """Closed-form m-th iterate: sum of K (G K)^s for s in [0, 2^m).

    Computed with doubling, sum_{s<2^{m+1}} x^s = (sum_{s<2^m} x^s)(I + x^{2^m}),
    so the work is O(m) boolean products rather than 2^m.
    """
    if m < 0:
        raise ValueError("m must be >= 0")
    kb = binary_pattern(kmat)
    gb = binary_pattern(g)
    _conformant(kb, gb)
    ny = kb.shape[1]
    geom = np.eye(ny, dtype=np.uint8)  # sum of (GK)^s so far
    power = kernels.bool_matmul(gb, kb)  # (GK)^(2^step)
    for _ in range(m):
        geom = np.bitwise_or(geom, kernels.bool_matmul(geom, power))
        power = kernels.bool_matmul(power, power)
    out = kernels.bool_matmul(kb, geom)
    out.flags.writeable = False
    return out


def minimal_term_count(kmat, g) -> np.ndarray:
    """Direct n-term sum K (G K)^0 + ... + K (G K)^{n-1}, n = min(n_u, n_y).

    Every higher-order term is dominated by this sum (a path revisiting a
    row or column can be shortcut), so it equals the closure.
    """
    kb = binary_pattern(kmat)
    gb = binary_pattern(g)
    _conformant(kb, gb)
    n = min(kb.shape)
    gk = kernels.bool_matmul(gb, kb)
    acc = kb.copy()
    term = kb
    for _ in range(n - 1):
        term = kernels.bool_matmul(term, gk)
        acc = np.bitwise_or(acc, term)
    acc.flags.writeable = False
    return acc
