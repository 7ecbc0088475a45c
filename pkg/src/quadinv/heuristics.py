"""Polynomial-time heuristics for a close QI sparsity subset.

Finding the *least* sparse QI pattern below K has no known exact polynomial
algorithm: at a failing quadruple (k,i,j,l) either K[k,i] or K[j,l] can be
cleared, and the choice matters.  Two guides are implemented:

* ``weights``    -- clear the link involved in fewer 3-hop connections;
* ``relaxed_lp`` -- recast links as {0,R} delays, solve the box-relaxed
                    nearest-subset LP, and clear the link the relaxation
                    assigned the larger delay (the more constrained one).

Violations are scanned in (k,l,i,j) order; ties clear (k,i).  The guiding
quantities are refreshed either after every disconnection or once per pass,
and every disconnection strictly shrinks the pattern, so termination is
certain (the all-zero pattern is QI).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import ShapeError, binary_pattern, sparsity_to_delay
from .delays import _qi_rows
from .simplex import GE, LE, LPInstance, simplex_solve

__all__ = [
    "HeuristicConfig",
    "SubsetResult",
    "three_hop_weights",
    "subset_by_weights",
    "subset_by_relaxed_lp",
]

METHODS = ("weights", "relaxed_lp")
SCHEDULES = ("per_disconnection", "per_pass")


@dataclass(frozen=True)
class HeuristicConfig:
    method: str
    schedule: str = "per_disconnection"
    scale: float = 1.0  # delay assigned to a missing link in the relaxed LP

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.schedule not in SCHEDULES:
            raise ValueError(f"schedule must be one of {SCHEDULES}, got {self.schedule!r}")
        if not self.scale > 0:
            raise ValueError("scale must be > 0")


@dataclass(frozen=True)
class SubsetResult:
    pattern: np.ndarray
    removed_links: tuple[tuple[int, int], ...]  # 1-based, in removal order
    hamming_distance: int


def _conformant(kb: np.ndarray, gb: np.ndarray) -> None:
    nu, ny = kb.shape
    if gb.shape != (ny, nu):
        raise ShapeError(
            f"plant pattern must be {(ny, nu)} for a {kb.shape} controller, got {gb.shape}"
        )


def three_hop_weights(kmat, g) -> np.ndarray:
    """Ordinary-arithmetic count of 3-hop routes behind each direct link.

    weight[k,l] = sum over i,j of K[k,i] G[i,j] K[j,l]; a crude measure of
    how many later disconnections clearing the direct link (k,l) would force.
    """
    kb = binary_pattern(kmat)
    gb = binary_pattern(g)
    _conformant(kb, gb)
    return kb.astype(np.int64) @ gb.astype(np.int64) @ kb.astype(np.int64)


def _still_violating(kb: np.ndarray, gb: np.ndarray, k: int, i: int, j: int, l: int) -> bool:
    return bool(kb[k, i] and gb[i, j] and kb[j, l] and not kb[k, l])


def _run_disconnect_loop(kb, gb, choose_clear, refresh, schedule) -> tuple[np.ndarray, list]:
    """Shared driver: scan violations, clear one link at a time until QI.

    ``choose_clear(k, i, j, l) -> (row, col)`` picks which link dies;
    ``refresh()`` recomputes the guiding state and is called before each
    scan (per_disconnection) or once per pass (per_pass).
    """
    removed: list[tuple[int, int]] = []
    while True:
        refresh()
        idx = kernels.sparsity_violation_scan(kb, gb)
        if idx.shape[0] == 0:
            break
        for row in idx:
            k, i, j, l = (int(v) for v in row)
            if not _still_violating(kb, gb, k, i, j, l):
                continue  # an earlier disconnection already settled this one
            r, c = choose_clear(k, i, j, l)
            kb[r, c] = 0
            removed.append((r + 1, c + 1))
            if schedule == "per_disconnection":
                break
    return kb, removed


def subset_by_weights(kmat, g, cfg: HeuristicConfig) -> SubsetResult:
    """3-hop-weight guided disconnection."""
    if cfg.method != "weights":
        raise ValueError("config method must be 'weights'")
    kb = binary_pattern(kmat).copy()
    gb = binary_pattern(g)
    _conformant(kb, gb)
    state = {"w": None}

    def refresh():
        state["w"] = kb.astype(np.int64) @ gb.astype(np.int64) @ kb.astype(np.int64)

    def choose(k, i, j, l):
        w = state["w"]
        return (k, i) if w[k, i] <= w[j, l] else (j, l)

    kb, removed = _run_disconnect_loop(kb, gb, choose, refresh, cfg.schedule)
    return _finish(kb, removed)


def _relaxed_delays(kb: np.ndarray, gb: np.ndarray, scale: float) -> np.ndarray:
    """Optimal delays of the box-relaxed nearest-subset problem.

    Variables are the delays only: the subset direction makes the 1-norm
    objective linear (minimize sum of t), ``t >= ttilde`` becomes the
    variable lower bound, and the box adds ``t <= scale`` rows.
    """
    nu, ny = kb.shape
    ttilde = sparsity_to_delay(kb, scale)
    p = sparsity_to_delay(gb, scale)
    nt = nu * ny
    rows: list[tuple[tuple[tuple[int, float], ...], str, float]] = []
    for (k, i, j, l), rhs in _qi_rows(p, nu, ny, skip_vacuous=True):
        acc: dict[int, float] = {}
        for idx, coef in ((k * ny + i, 1.0), (j * ny + l, 1.0), (k * ny + l, -1.0)):
            acc[idx] = acc.get(idx, 0.0) + coef
        rows.append((tuple(acc.items()), GE, rhs))
    for c in range(nt):
        rows.append((((c, 1.0),), LE, float(scale)))
    lp = LPInstance(
        num_vars=nt,
        objective=(1.0,) * nt,
        constraints=tuple(rows),
        var_lower_bounds=tuple(float(v) for v in ttilde.reshape(-1)),
    )
    return simplex_solve(lp).x.reshape(nu, ny)


def subset_by_relaxed_lp(kmat, g, cfg: HeuristicConfig) -> SubsetResult:
    """Relaxed-LP guided disconnection."""
    if cfg.method != "relaxed_lp":
        raise ValueError("config method must be 'relaxed_lp'")
    kb = binary_pattern(kmat).copy()
    gb = binary_pattern(g)
    _conformant(kb, gb)
    state = {"t": None}

    def refresh():
        state["t"] = _relaxed_delays(kb, gb, cfg.scale)

    def choose(k, i, j, l):
        t = state["t"]
        return (k, i) if t[k, i] >= t[j, l] else (j, l)

    kb, removed = _run_disconnect_loop(kb, gb, choose, refresh, cfg.schedule)
    return _finish(kb, removed)


def _finish(kb: np.ndarray, removed: list) -> SubsetResult:
    kb = kb.copy()
    kb.flags.writeable = False
    return SubsetResult(
        pattern=kb,
        removed_links=tuple(removed),
        hamming_distance=len(removed),
    )
