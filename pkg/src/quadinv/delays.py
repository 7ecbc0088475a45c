"""Nearest quadratically invariant delay constraints.

Three routes to a nearby feasible point of the polyhedron

    { t >= 0 : t[k,i] + p[i,j] + t[j,l] >= t[k,l]  for all i,j,k,l }

optionally intersected with ``t >= ttilde`` (subset) or ``t <= ttilde``
(superset):

* ``minplus_superset`` -- the closure iteration in the (min,+) semiring,
  which yields the entrywise-largest feasible point below ``ttilde``; it is
  the superset answer for every norm and handles infinite delays natively;
* 1-/inf-norm -- linear programs solved by the in-package simplex;
* 2-norm -- Euclidean projection onto the polyhedron via Dykstra's
  alternating-projection method.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import ShapeError, delay_matrix
from .qitest import qi_delay
from .simplex import GE, LE, LPInstance, simplex_solve

__all__ = [
    "MODES",
    "NORMS",
    "NearestQuery",
    "NearestResult",
    "SolverFailure",
    "InternalCheckError",
    "minplus_superset",
    "build_lp",
    "qi_halfspaces",
    "solve_closest",
]

MODES = ("set", "subset", "superset")
NORMS = ("one", "two", "inf")

DEFAULT_SOLVER_TOL = 1e-9
DYKSTRA_SWEEP_CAP = 10_000


class SolverFailure(RuntimeError):
    """A solver ran out of its iteration budget; carries residual info."""


class InternalCheckError(RuntimeError):
    """The produced point failed its own feasibility check; always a bug."""


@dataclass(frozen=True)
class NearestQuery:
    mode: str
    norm: str
    tiebreak_secondary_one_norm: bool = False
    tolerance: float = 1e-6

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.norm not in NORMS:
            raise ValueError(f"norm must be one of {NORMS}, got {self.norm!r}")
        if self.tiebreak_secondary_one_norm and self.norm != "inf":
            raise ValueError("the 1-norm tiebreak stage only applies to norm='inf'")
        if not 0.0 < self.tolerance <= 1e-2:
            raise ValueError("tolerance must lie in (0, 1e-2]")


@dataclass(frozen=True)
class NearestResult:
    t_out: np.ndarray
    objective: float
    mode: str
    norm: str | None  # None for the norm-independent (min,+) closure
    solver: str  # "minplus" | "simplex" | "dykstra"
    iterations: int  # closure steps / simplex pivots / dykstra sweeps
    certificate: dict | None = None


def _conformant(t: np.ndarray, p: np.ndarray) -> None:
    nu, ny = t.shape
    if p.shape != (ny, nu):
        raise ShapeError(
            f"propagation delays must be {(ny, nu)} for {t.shape} transmission delays, "
            f"got {p.shape}"
        )


def minplus_superset(ttilde, p) -> NearestResult:
    """Entrywise-largest QI delay matrix below *ttilde* via the (min,+) closure.

    Iterates ``T <- min(T, T (x) p (x) T)`` (tropical products) to its fixed
    point; each delay lands on the fastest indirect route between its pair
    of signals, which is why the answer does not depend on a norm.
    """
    t0 = delay_matrix(ttilde)
    pm = delay_matrix(p)
    _conformant(t0, pm)
    bound = math.ceil(math.log2(min(t0.shape))) if min(t0.shape) > 1 else 0
    t = np.asarray(t0, dtype=np.float64)
    iterations = 0
    while True:
        step = kernels.minplus_matmul(kernels.minplus_matmul(t, pm), t)
        nxt = np.minimum(t, step)
        if np.array_equal(nxt, t):
            break
        t = nxt
        iterations += 1
        if iterations > bound:  # guaranteed unreachable; trips only on a kernel bug
            raise AssertionError("minplus closure exceeded its iteration bound")
    delta = np.where(t == t0, 0.0, t - t0)  # avoids inf - inf at untouched cells
    t = t.copy()
    t.flags.writeable = False
    return NearestResult(
        t_out=t,
        objective=float(np.abs(delta).sum()),
        mode="superset",
        norm=None,
        solver="minplus",
        iterations=iterations,
    )


def _cell(k: int, l: int, ny: int) -> int:
    return k * ny + l


def _qi_rows(p: np.ndarray, nu: int, ny: int, skip_vacuous: bool):
    """Yield ((k,i,j,l), rhs) for every QI constraint row with finite p[i,j]."""
    for k in range(nu):
        for l in range(ny):
            for i in range(ny):
                for j in range(nu):
                    if not np.isfinite(p[i, j]):
                        continue  # an infinite hop can never undercut t[k,l]
                    if skip_vacuous and (i == l or k == j):
                        continue  # reduces to t >= -p, implied by t >= 0
                    yield (k, i, j, l), -float(p[i, j])


def build_lp(ttilde, p, query: NearestQuery, skip_vacuous: bool = False) -> LPInstance:
    """Encode the nearest-delay problem as an LP (1- and inf-norms only).

    Variables are the n_u * n_y delays followed by the absolute-value slacks
    (one per cell for the 1-norm, a single shared one for the inf-norm).
    ``skip_vacuous`` drops QI rows that are implied by ``t >= 0``; the
    feasible set is unchanged.
    """
    t0 = delay_matrix(ttilde)
    pm = delay_matrix(p)
    _conformant(t0, pm)
    if not np.isfinite(t0).all():
        raise ValueError(
            "infinite transmission delays are not supported by the LP encoding; "
            "map them to a finite scale first (see sparsity_to_delay)"
        )
    if query.norm not in ("one", "inf"):
        raise ValueError("only the 1- and inf-norms have an LP encoding")
    nu, ny = t0.shape
    nt = nu * ny
    per_cell = query.norm == "one"
    num_vars = nt + (nt if per_cell else 1)

    objective = [0.0] * num_vars
    for s in range(nt if per_cell else 1):
        objective[nt + s] = 1.0

    rows: list[tuple[tuple[tuple[int, float], ...], str, float]] = []
    for (k, i, j, l), rhs in _qi_rows(pm, nu, ny, skip_vacuous):
        acc: dict[int, float] = {}
        for idx, coef in (
            (_cell(k, i, ny), 1.0),
            (_cell(j, l, ny), 1.0),
            (_cell(k, l, ny), -1.0),
        ):
            acc[idx] = acc.get(idx, 0.0) + coef
        rows.append((tuple(acc.items()), GE, rhs))

    if query.mode == "subset":
        for k in range(nu):
            for l in range(ny):
                rows.append((((_cell(k, l, ny), 1.0),), GE, float(t0[k, l])))
    elif query.mode == "superset":
        for k in range(nu):
            for l in range(ny):
                rows.append((((_cell(k, l, ny), 1.0),), LE, float(t0[k, l])))

    for k in range(nu):
        for l in range(ny):
            c = _cell(k, l, ny)
            s = nt + c if per_cell else nt
            tv = float(t0[k, l])
            rows.append((((s, 1.0), (c, -1.0)), GE, -tv))  # s >= t - ttilde
            rows.append((((s, 1.0), (c, 1.0)), GE, tv))  # s >= ttilde - t
    return LPInstance(
        num_vars=num_vars,
        objective=tuple(objective),
        constraints=tuple(rows),
        var_lower_bounds=(0.0,) * num_vars,
    )


def qi_halfspaces(p, nu: int, ny: int) -> tuple[np.ndarray, np.ndarray]:
    """Dense (A, b) with one row per non-vacuous QI constraint, A @ vec(t) >= b."""
    pm = delay_matrix(p)
    arows = []
    brows = []
    for (k, i, j, l), rhs in _qi_rows(pm, nu, ny, skip_vacuous=True):
        a = np.zeros(nu * ny)
        a[_cell(k, i, ny)] += 1.0
        a[_cell(j, l, ny)] += 1.0
        a[_cell(k, l, ny)] -= 1.0
        arows.append(a)
        brows.append(rhs)
    if not arows:
        return np.zeros((0, nu * ny)), np.zeros(0)
    return np.stack(arows), np.asarray(brows)


def _mode_box(t0: np.ndarray, mode: str) -> tuple[np.ndarray, np.ndarray]:
    flat = t0.reshape(-1)
    lo = flat.copy() if mode == "subset" else np.zeros(flat.shape[0])
    hi = flat.copy() if mode == "superset" else np.full(flat.shape[0], np.inf)
    return lo, hi


def _clamp_to_mode(t: np.ndarray, t0: np.ndarray, mode: str) -> np.ndarray:
    out = np.maximum(t, 0.0)
    if mode == "subset":
        out = np.maximum(out, t0)
    elif mode == "superset":
        out = np.minimum(out, t0)
    return out


def _norm_value(delta: np.ndarray, norm: str) -> float:
    if norm == "one":
        return float(np.abs(delta).sum())
    if norm == "two":
        return float(np.sqrt((delta * delta).sum()))
    return float(np.abs(delta).max(initial=0.0))


def _solve_two_norm(t0, pm, query, solver_tol):
    nu, ny = t0.shape
    a, b = qi_halfspaces(pm, nu, ny)
    asq = (a * a).sum(axis=1)
    lo, hi = _mode_box(t0, query.mode)
    x, sweeps, change = kernels.dykstra_project(
        a, b, asq, lo, hi, t0.reshape(-1).astype(np.float64), solver_tol, DYKSTRA_SWEEP_CAP
    )
    if change >= solver_tol:
        resid = float(np.max(b - a @ x, initial=0.0))
        raise SolverFailure(
            f"Dykstra projection did not converge in {DYKSTRA_SWEEP_CAP} sweeps "
            f"(last sweep change {change:.3e}, max halfspace violation {resid:.3e})"
        )
    resid = float(np.max(b - a @ x, initial=0.0))
    t_out = x.reshape(nu, ny)
    return t_out, sweeps, {"max_violation": max(resid, 0.0), "sweeps": sweeps}


def _solve_lp_norm(t0, pm, query, solver_tol):
    nu, ny = t0.shape
    nt = nu * ny
    lp = build_lp(t0, pm, query, skip_vacuous=True)
    sol = simplex_solve(lp, tol=solver_tol)
    t_out = sol.x[:nt].reshape(nu, ny)
    pivots = sol.pivots
    cert = {"max_violation": lp.max_violation(sol.x), "pivots": sol.pivots}
    if query.norm == "inf" and query.tiebreak_secondary_one_norm:
        cap = sol.objective + 1e-9
        base = build_lp(t0, pm, NearestQuery(mode=query.mode, norm="one"), skip_vacuous=True)
        extra = list(base.constraints)
        for k in range(nu):
            for l in range(ny):
                c = _cell(k, l, ny)
                tv = float(t0[k, l])
                extra.append((((c, 1.0),), LE, tv + cap))  # t - ttilde <= cap
                extra.append((((c, 1.0),), GE, tv - cap))  # ttilde - t <= cap
        second = LPInstance(
            num_vars=base.num_vars,
            objective=base.objective,
            constraints=tuple(extra),
            var_lower_bounds=base.var_lower_bounds,
        )
        sol2 = simplex_solve(second, tol=solver_tol)
        t_out = sol2.x[:nt].reshape(nu, ny)
        pivots += sol2.pivots
        cert = {
            "max_violation": second.max_violation(sol2.x),
            "pivots": pivots,
            "secondary_one_norm": sol2.objective,
        }
    return t_out, pivots, cert


def solve_closest(
    ttilde, p, query: NearestQuery, solver_tol: float = DEFAULT_SOLVER_TOL
) -> NearestResult:
    """Nearest QI transmission delays to *ttilde* in the queried mode and norm.

    1- and inf-norm queries run the simplex on the LP encoding; 2-norm
    queries project onto the constraint polyhedron with Dykstra's method.
    The returned point is verified feasible within ``query.tolerance``
    before it is handed back.
    """
    t0 = delay_matrix(ttilde)
    pm = delay_matrix(p)
    _conformant(t0, pm)
    if not np.isfinite(t0).all():
        raise ValueError(
            "infinite transmission delays are not supported here; use minplus_superset "
            "or map them to a finite scale first"
        )
    if query.norm == "two":
        t_out, iterations, cert = _solve_two_norm(t0, pm, query, solver_tol)
        solver = "dykstra"
    else:
        t_out, iterations, cert = _solve_lp_norm(t0, pm, query, solver_tol)
        solver = "simplex"

    t_out = _clamp_to_mode(t_out, t0, query.mode)
    report = qi_delay(t_out, pm, tol=query.tolerance)
    if not report.is_qi:
        worst = max(v.slack for v in report.violations)
        raise InternalCheckError(
            f"solver returned an infeasible point (worst QI slack {worst:.3e}); "
            "this indicates a bug, not a property of the input"
        )
    t_out = t_out.copy()
    t_out.flags.writeable = False
    return NearestResult(
        t_out=t_out,
        objective=_norm_value((t_out - t0).reshape(-1), query.norm),
        mode=query.mode,
        norm=query.norm,
        solver=solver,
        iterations=iterations,
        certificate=cert,
    )
