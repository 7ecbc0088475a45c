"""Quadratic-invariance tests for sparsity and delay constraints.

A controller constraint is quadratically invariant w.r.t. the plant exactly
when every "indirect route" a signal can take is at least as permissive as
the direct one.  For delays that reads

    t[k,i] + p[i,j] + t[j,l]  >=  t[k,l]      for all i, l, j, k

and for sparsity patterns

    K[k,i] G[i,j] K[j,l] (1 - K[k,l])  =  0   for all i, l, j, k.

The checkers enumerate all n_u^2 * n_y^2 quadruples and report every failing
one, sorted by (k, l, i, j) with 1-based indices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import ShapeError, bin_add, bin_mul, binary_pattern, delay_matrix

__all__ = [
    "QIViolation",
    "QIReport",
    "TriangleInequalityError",
    "qi_sparsity",
    "qi_sparsity_identity",
    "qi_delay",
    "qi_delay_reduced",
    "triangle_holds",
]


@dataclass(frozen=True)
class QIViolation:
    """One failing quadruple; indices are 1-based, slack is None for sparsity."""

    k: int
    i: int
    j: int
    l: int
    slack: float | None = None


@dataclass(frozen=True)
class QIReport:
    kind: str  # "sparsity" | "delay"
    is_qi: bool
    violations: tuple[QIViolation, ...]

    def __post_init__(self):
        assert self.is_qi == (len(self.violations) == 0)


class TriangleInequalityError(ValueError):
    """Raised when the reduced delay test is applied without its precondition."""


def _check_conformant(t_like: np.ndarray, p_like: np.ndarray, what: str) -> None:
    nu, ny = t_like.shape
    if p_like.shape != (ny, nu):
        raise ShapeError(
            f"{what} shapes not conformant: controller is {t_like.shape}, "
            f"plant must be {(ny, nu)}, got {p_like.shape}"
        )


def qi_sparsity(kmat, g) -> QIReport:
    """Test a controller sparsity pattern *kmat* against plant pattern *g*."""
    kb = binary_pattern(kmat)
    gb = binary_pattern(g)
    _check_conformant(kb, gb, "sparsity")
    idx = kernels.sparsity_violation_scan(kb, gb)
    viols = tuple(
        QIViolation(k=int(r[0]) + 1, i=int(r[1]) + 1, j=int(r[2]) + 1, l=int(r[3]) + 1)
        for r in idx
    )
    return QIReport(kind="sparsity", is_qi=len(viols) == 0, violations=viols)


def qi_sparsity_identity(kmat, g) -> bool:
    """Matrix-identity shortcut: QI holds iff K + K G K = K.

    Must agree with :func:`qi_sparsity` on every input; kept separate so the
    enumeration stays the reference semantics.
    """
    kb = binary_pattern(kmat)
    gb = binary_pattern(g)
    _check_conformant(kb, gb, "sparsity")
    kgk = bin_mul(bin_mul(kb, gb), kb)
    return np.array_equal(bin_add(kb, kgk), kb)


def qi_delay(t, p, tol: float = 0.0) -> QIReport:
    """Test transmission delays *t* against propagation delays *p*.

    Comparisons are exact by default; *tol* ignores violations whose slack
    does not exceed it (for noisy measured delays).
    """
    tm = delay_matrix(t)
    pm = delay_matrix(p)
    _check_conformant(tm, pm, "delay")
    if tol < 0:
        raise ValueError("tol must be >= 0")
    idx, slack = kernels.delay_violation_scan(tm, pm, float(tol))
    viols = tuple(
        QIViolation(
            k=int(r[0]) + 1, i=int(r[1]) + 1, j=int(r[2]) + 1, l=int(r[3]) + 1, slack=float(s)
        )
        for r, s in zip(idx, slack)
    )
    return QIReport(kind="delay", is_qi=len(viols) == 0, violations=viols)


def triangle_holds(t) -> tuple[bool, tuple[int, int, int] | None]:
    """Check t[k,l] <= t[k,m] + t[m,l] for all triples of a square delay matrix.

    Returns ``(True, None)`` or ``(False, (k, m, l))`` with the first failing
    triple in 1-based scan order.
    """
    tm = delay_matrix(t)
    n = tm.shape[0]
    if tm.shape[1] != n:
        raise ShapeError(f"triangle inequality needs a square matrix, got {tm.shape}")
    for k in range(n):
        for m in range(n):
            for l in range(n):
                if tm[k, m] + tm[m, l] < tm[k, l]:
                    return False, (k + 1, m + 1, l + 1)
    return True, None


def qi_delay_reduced(t, p, tol: float = 0.0) -> QIReport:
    """Reduced pairwise test p[i,j] >= t[i,j] for square systems.

    Only valid when the transmission delays satisfy the triangle inequality;
    refuses (rather than silently falling back) otherwise.  A failing pair
    (i, j) is reported as the quadruple (k, i, j, l) = (i, i, j, j), which
    places the violated cell at (k, l) = (i, j).
    """
    tm = delay_matrix(t)
    pm = delay_matrix(p)
    n = tm.shape[0]
    if tm.shape[1] != n or pm.shape != (n, n):
        raise ShapeError(f"reduced test needs square matrices, got {tm.shape} and {pm.shape}")
    ok, witness = triangle_holds(tm)
    if not ok:
        raise TriangleInequalityError(f"triangle inequality fails at {witness}")
    viols = []
    for i in range(n):
        for j in range(n):
            if pm[i, j] < tm[i, j] - tol:
                viols.append(
                    QIViolation(
                        k=i + 1, i=i + 1, j=j + 1, l=j + 1, slack=float(tm[i, j] - pm[i, j])
                    )
                )
    viols.sort(key=lambda v: (v.k, v.l, v.i, v.j))
    return QIReport(kind="delay", is_qi=len(viols) == 0, violations=tuple(viols))
