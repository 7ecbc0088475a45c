"""Self-contained primal simplex for small dense LPs.

Two-phase tableau method with Bland's anti-cycling rule (smallest-index
entering column; smallest basic-variable index among ratio ties).  The
instances this package produces are small (hundreds of rows), so a dense
numpy tableau beats anything fancier.

Minimizes ``c @ x`` subject to rows ``a @ x >= b`` / ``a @ x <= b`` and
``x >= lb``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "LPInstance",
    "SimplexSolution",
    "InfeasibleLPError",
    "UnboundedLPError",
    "PivotLimitError",
    "simplex_solve",
]

GE = ">="
LE = "<="


@dataclass(frozen=True)
class LPInstance:
    """Inequality-form LP; constraint rows are sparse (index, coefficient) lists."""

    num_vars: int
    objective: tuple[float, ...]
    constraints: tuple[tuple[tuple[tuple[int, float], ...], str, float], ...]
    var_lower_bounds: tuple[float, ...]

    def __post_init__(self):
        if len(self.objective) != self.num_vars or len(self.var_lower_bounds) != self.num_vars:
            raise ValueError("objective/bound lengths must equal num_vars")
        for coeffs, rel, rhs in self.constraints:
            if rel not in (GE, LE):
                raise ValueError(f"relation must be {GE!r} or {LE!r}, got {rel!r}")
            if not np.isfinite(rhs):
                raise ValueError("constraint rhs must be finite")
            for idx, _ in coeffs:
                if not 0 <= idx < self.num_vars:
                    raise ValueError(f"variable index {idx} out of range")

    def dense(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, list[str]]:
        """Dense (A, rels, b) view plus relation list; for solvers and checks."""
        m = len(self.constraints)
        a = np.zeros((m, self.num_vars))
        b = np.empty(m)
        rels = []
        for r, (coeffs, rel, rhs) in enumerate(self.constraints):
            for idx, coef in coeffs:
                a[r, idx] += coef
            b[r] = rhs
            rels.append(rel)
        return a, np.asarray(self.objective, dtype=float), b, rels

    def max_violation(self, x: np.ndarray) -> float:
        """Largest constraint/bound violation of *x* (0 when feasible)."""
        a, _, b, rels = self.dense()
        resid = a @ x - b
        worst = 0.0
        for r, rel in enumerate(rels):
            v = -resid[r] if rel == GE else resid[r]
            worst = max(worst, float(v))
        worst = max(worst, float(np.max(np.asarray(self.var_lower_bounds) - x, initial=0.0)))
        return worst


@dataclass(frozen=True)
class SimplexSolution:
    x: np.ndarray
    objective: float
    pivots: int


class InfeasibleLPError(RuntimeError):
    pass


class UnboundedLPError(RuntimeError):
    pass


class PivotLimitError(RuntimeError):
    pass


def _pivot(tableau: np.ndarray, cost: np.ndarray, basis: np.ndarray, row: int, col: int) -> None:
    piv = tableau[row, col]
    tableau[row] /= piv
    factors = tableau[:, col].copy()
    factors[row] = 0.0
    tableau -= np.outer(factors, tableau[row])
    cost -= cost[col] * tableau[row]
    basis[row] = col
    # keep rhs nonnegative against roundoff
    rhs = tableau[:, -1]
    rhs[(rhs < 0) & (rhs > -1e-10)] = 0.0


def _bland_loop(
    tableau: np.ndarray,
    cost: np.ndarray,
    basis: np.ndarray,
    ncols: int,
    tol: float,
    max_pivots: int,
) -> int:
    pivots = 0
    while True:
        improving = np.nonzero(cost[:ncols] < -tol)[0]
        if improving.size == 0:
            return pivots
        entering = int(improving[0])  # Bland: smallest improving index
        col = tableau[:, entering]
        rows = np.nonzero(col > tol)[0]
        if rows.size == 0:
            raise UnboundedLPError("objective unbounded below")
        ratios = tableau[rows, -1] / col[rows]
        tied = rows[ratios <= ratios.min() + 1e-12]
        leaving = int(tied[np.argmin(basis[tied])])  # Bland: smallest basic index
        _pivot(tableau, cost, basis, leaving, entering)
        pivots += 1
        if pivots > max_pivots:
            raise PivotLimitError(f"simplex exceeded {max_pivots} pivots")


def simplex_solve(lp: LPInstance, tol: float = 1e-9, max_pivots: int = 20000) -> SimplexSolution:
    """Solve *lp*; raises on infeasible, unbounded, or pivot-limit outcomes."""
    a, c, b, rels = lp.dense()
    lb = np.asarray(lp.var_lower_bounds, dtype=float)
    m, n = a.shape

    # substitute x = lb + xhat, xhat >= 0
    b = b - a @ lb
    const = float(c @ lb)

    # orient rows so rhs >= 0, then append slack/surplus columns
    flip = b < 0
    a = np.where(flip[:, None], -a, a)
    b = np.where(flip, -b, b)
    need_artificial = np.array(
        [(rel == GE) != fl for rel, fl in zip(rels, flip)], dtype=bool
    )  # surplus rows
    slack_sign = np.where(need_artificial, -1.0, 1.0)

    n_art = int(need_artificial.sum())
    ncols = n + m + n_art
    tableau = np.zeros((m, ncols + 1))
    tableau[:, :n] = a
    tableau[np.arange(m), n + np.arange(m)] = slack_sign
    basis = np.empty(m, dtype=np.int64)
    art_col = n + m
    for i in range(m):
        if need_artificial[i]:
            tableau[i, art_col] = 1.0
            basis[i] = art_col
            art_col += 1
        else:
            basis[i] = n + i
    tableau[:, -1] = b

    pivots = 0
    m0 = m  # slack columns always index n..n+m0-1, even if rows get dropped
    if n_art:
        cost = np.zeros(ncols + 1)
        cost[n + m0 : n + m0 + n_art] = 1.0
        for i in range(m):
            if basis[i] >= n + m0:
                cost -= tableau[i]
        pivots += _bland_loop(tableau, cost, basis, ncols, tol, max_pivots)
        if -cost[-1] > 1e-7 * (1.0 + abs(b).max()):
            raise InfeasibleLPError(f"phase-1 objective {-cost[-1]:.3e} > 0")
        # drive leftover (degenerate) artificials out of the basis
        for i in range(m):
            if basis[i] >= n + m0:
                for j in range(n + m0):
                    if abs(tableau[i, j]) > tol:
                        _pivot(tableau, cost, basis, i, j)
                        pivots += 1
                        break
        keep = basis < n + m0
        if not keep.all():  # redundant rows: artificial stuck at zero level
            tableau = tableau[keep]
            basis = basis[keep]
            m = tableau.shape[0]
        tableau = np.hstack([tableau[:, : n + m0], tableau[:, -1:]])
        ncols = n + m0

    cost = np.zeros(ncols + 1)
    cost[:n] = c
    for i in range(m):
        if cost[basis[i]] != 0.0:
            cost -= cost[basis[i]] * tableau[i]
    pivots += _bland_loop(tableau, cost, basis, ncols, tol, max_pivots)

    xhat = np.zeros(ncols)
    xhat[basis] = tableau[:, -1]
    x = xhat[:n] + lb
    return SimplexSolution(x=x, objective=float(c @ xhat[:n]) + const, pivots=pivots)
