"""Independent brute-force references for the test suite.

Nothing here shares algorithmic machinery with the production paths: the
superset/subset searches enumerate candidate patterns outright, and the LP
reference re-solves instances over exact rationals with its own pivoting
code.  Keep it that way -- these exist to catch bugs in the fast paths.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import kernels
from .core import binary_pattern
from .heuristics import _conformant
from .simplex import GE, LE, LPInstance

try:
    from gmpy2 import mpq as _Q  # much faster than Fraction on larger tableaus
except ImportError:  # pragma: no cover
    _Q = Fraction

__all__ = [
    "SearchSpaceError",
    "RationalLP",
    "RationalInfeasibleError",
    "RationalUnboundedError",
    "exhaustive_minimal_superset",
    "exhaustive_maximal_subset",
    "solve_rational_lp",
]

ENUM_CAP = 20  # 2^cap candidates; keeps a single oracle call near a second


class SearchSpaceError(ValueError):
    pass


def exhaustive_minimal_superset(kmat, g, cap: int = ENUM_CAP) -> np.ndarray:
    """Globally minimum-cardinality Z with Z >= K and Z G Z <= Z, by enumeration.

    Also asserts the minimizer is unique, which the closure theory promises.
    """
    kb = binary_pattern(kmat)
    gb = binary_pattern(g)
    _conformant(kb, gb)
    zeros = np.argwhere(kb == 0)
    if zeros.shape[0] > cap:
        raise SearchSpaceError(
            f"{zeros.shape[0]} free cells exceed the enumeration cap of {cap}"
        )
    zr = np.ascontiguousarray(zeros[:, 0].astype(np.int64))
    zc = np.ascontiguousarray(zeros[:, 1].astype(np.int64))
    mask, best_nnz, n_best = kernels.min_superset_enum(kb, gb, zr, zc)
    if best_nnz < 0:
        raise AssertionError("no feasible superset found; the all-ones pattern is always QI")
    if n_best != 1:
        raise AssertionError(f"superset minimizer not unique ({n_best} optima); theory bug")
    z = kb.copy()
    for s in range(zr.shape[0]):
        if (mask >> s) & 1:
            z[zr[s], zc[s]] = 1
    z.flags.writeable = False
    return z


def exhaustive_maximal_subset(kmat, g, cap: int = ENUM_CAP) -> tuple[np.ndarray, int]:
    """A maximum-cardinality QI Z <= K plus the optimal Hamming distance.

    Multiple optima are possible; the lexicographically smallest row-major
    vector is returned for determinism.
    """
    kb = binary_pattern(kmat)
    gb = binary_pattern(g)
    _conformant(kb, gb)
    ones = np.argwhere(kb == 1)
    if ones.shape[0] > cap:
        raise SearchSpaceError(f"{ones.shape[0]} set cells exceed the enumeration cap of {cap}")
    orr = np.ascontiguousarray(ones[:, 0].astype(np.int64))
    occ = np.ascontiguousarray(ones[:, 1].astype(np.int64))
    flat, best_nnz = kernels.max_subset_enum(kb, gb, orr, occ)
    z = flat.reshape(kb.shape).copy()
    z.flags.writeable = False
    return z, int(kb.sum()) - int(best_nnz)


# ---------------------------------------------------------------------------
# exact-rational LP reference
# ---------------------------------------------------------------------------


def _q(x) -> object:
    # Fraction(float) is the exact binary expansion, so the path is lossless
    return _Q(Fraction(x)) if not isinstance(x, Fraction) else _Q(x)


@dataclass(frozen=True)
class RationalLP:
    num_vars: int
    objective: tuple
    constraints: tuple  # ((idx, q) ...), rel, q_rhs
    var_lower_bounds: tuple

    @classmethod
    def from_instance(cls, lp: LPInstance) -> "RationalLP":
        return cls(
            num_vars=lp.num_vars,
            objective=tuple(_q(c) for c in lp.objective),
            constraints=tuple(
                (tuple((i, _q(c)) for i, c in coeffs), rel, _q(rhs))
                for coeffs, rel, rhs in lp.constraints
            ),
            var_lower_bounds=tuple(_q(b) for b in lp.var_lower_bounds),
        )


class RationalInfeasibleError(RuntimeError):
    pass


class RationalUnboundedError(RuntimeError):
    pass


def _rational_pivot(rows, costs, basis, r, c):
    zero = _Q(0)
    piv = rows[r][c]
    inv = 1 / piv
    rows[r] = [v * inv for v in rows[r]]
    prow = rows[r]
    for k in range(len(rows)):
        if k == r:
            continue
        f = rows[k][c]
        if f != zero:
            rows[k] = [a - f * b for a, b in zip(rows[k], prow)]
    f = costs[c]
    if f != zero:
        costs[:] = [a - f * b for a, b in zip(costs, prow)]
    basis[r] = c


def _rational_bland(rows, costs, basis, width):
    zero = _Q(0)
    while True:
        col = -1
        for j in range(width):
            if costs[j] < zero:
                col = j
                break
        if col < 0:
            return
        best = None
        lead = -1
        for r in range(len(rows)):
            a = rows[r][col]
            if a > zero:
                ratio = rows[r][-1] / a
                if best is None or ratio < best or (ratio == best and basis[r] < basis[lead]):
                    best = ratio
                    lead = r
        if lead < 0:
            raise RationalUnboundedError("rational LP is unbounded below")
        _rational_pivot(rows, costs, basis, lead, col)


def solve_rational_lp(rlp: RationalLP) -> tuple[object, list]:
    """Exact optimum of *rlp* by two-phase simplex with Bland's rule.

    Returns ``(objective, x)`` as exact rationals.  No tolerances anywhere:
    comparisons are exact, so Bland's rule genuinely guarantees termination.
    """
    zero, one = _Q(0), _Q(1)
    n = rlp.num_vars
    lb = list(rlp.var_lower_bounds)
    m = len(rlp.constraints)

    dense = []
    rhs = []
    for coeffs, rel, b in rlp.constraints:
        row = [zero] * n
        for i, c in coeffs:
            row[i] = row[i] + c
        shift = sum((row[i] * lb[i] for i in range(n)), zero)
        row_rhs = b - shift
        if rel == LE:
            row = [-v for v in row]
            row_rhs = -row_rhs
        elif rel != GE:
            raise ValueError(f"unknown relation {rel!r}")
        dense.append(row)
        rhs.append(row_rhs)

    # now every row reads a.x >= rhs with x >= 0; orient to rhs >= 0 and
    # attach slack (-1 surplus after orientation flips to +1 slack, and
    # vice versa), plus an artificial wherever no ready basis column exists
    width = n + m
    rows = []
    basis = [0] * m
    art_cols = []
    for r in range(m):
        row = list(dense[r])
        b = rhs[r]
        surplus = True
        if b < zero:
            row = [-v for v in row]
            b = -b
            surplus = False
        row += [zero] * m
        row[n + r] = -one if surplus else one
        rows.append(row + [b])
        if surplus:
            art_cols.append(r)
        else:
            basis[r] = n + r

    n_art = len(art_cols)
    if n_art:
        for row in rows:
            row[-1:-1] = [zero] * n_art
        for a_i, r in enumerate(art_cols):
            rows[r][width + a_i] = one
            basis[r] = width + a_i
        costs = [zero] * (width + n_art + 1)
        for a_i in range(n_art):
            costs[width + a_i] = one
        for r in art_cols:
            costs = [a - b for a, b in zip(costs, rows[r])]
        _rational_bland(rows, costs, basis, width + n_art)
        if -costs[-1] != zero:
            raise RationalInfeasibleError("rational LP is infeasible")
        for r in range(m):
            if basis[r] >= width:
                for j in range(width):
                    if rows[r][j] != zero:
                        _rational_pivot(rows, costs, basis, r, j)
                        break
        keep = [r for r in range(m) if basis[r] < width]
        rows = [rows[r][:width] + rows[r][-1:] for r in keep]
        basis = [basis[r] for r in keep]

    costs = [zero] * (width + 1)
    for j in range(n):
        costs[j] = rlp.objective[j]
    for r in range(len(rows)):
        f = costs[basis[r]]
        if f != zero:
            costs = [a - f * b for a, b in zip(costs, rows[r])]
    _rational_bland(rows, costs, basis, width)

    xhat = [zero] * width
    for r in range(len(rows)):
        xhat[basis[r]] = rows[r][-1]
    x = [xhat[i] + lb[i] for i in range(n)]
    objective = sum((rlp.objective[i] * x[i] for i in range(n)), zero)
    return objective, x
