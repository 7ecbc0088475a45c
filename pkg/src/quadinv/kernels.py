"""Hot numeric kernels, each in two flavours: a numba ``@njit`` version and a
pure-numpy fallback.

The active flavour is chosen once at import time from the environment::

    QUADINV_BACKEND=numba   # default when numba is importable
    QUADINV_BACKEND=numpy   # force the fallback path

Both flavours stay importable regardless of the flag (``IMPLS``), which is
what ``python -m quadinv.bench`` uses to time them against each other.

All kernels take plain ndarrays: binary patterns as uint8, delays as float64
(``inf`` = no connection).  Index tuples are 0-based here; callers translate
to the 1-based (k,l)/(i,j) convention used in reports.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = [
    "HAVE_NUMBA",
    "USE_NUMBA",
    "active_backend",
    "bool_matmul",
    "minplus_matmul",
    "delay_violation_scan",
    "sparsity_violation_scan",
    "dykstra_project",
    "min_superset_enum",
    "max_subset_enum",
    "IMPLS",
]

_env = os.environ.get("QUADINV_BACKEND", "").strip().lower()
if _env not in ("", "numba", "numpy"):
    raise ValueError(f"QUADINV_BACKEND must be 'numba' or 'numpy', got {_env!r}")

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False
    if _env == "numba":
        raise ImportError("QUADINV_BACKEND=numba requested but numba is not importable")

USE_NUMBA = HAVE_NUMBA and _env != "numpy"


def active_backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# boolean (OR/AND) matrix product
# ---------------------------------------------------------------------------


def _bool_matmul_np(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return ((x.astype(np.int64) @ y.astype(np.int64)) > 0).astype(np.uint8)


if HAVE_NUMBA:

    @njit(cache=True)
    def _bool_matmul_nb(x, y):
        m, kk = x.shape
        n = y.shape[1]
        out = np.zeros((m, n), dtype=np.uint8)
        for i in range(m):
            for k in range(kk):
                if x[i, k]:
                    for j in range(n):
                        if y[k, j]:
                            out[i, j] = 1
        return out


# ---------------------------------------------------------------------------
# (min,+) matrix product
# ---------------------------------------------------------------------------


def _minplus_matmul_np(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.min(a[:, :, None] + b[None, :, :], axis=1)


if HAVE_NUMBA:

    @njit(cache=True)
    def _minplus_matmul_nb(a, b):
        m, kk = a.shape
        n = b.shape[1]
        out = np.full((m, n), np.inf)
        for i in range(m):
            for k in range(kk):
                v = a[i, k]
                if v == np.inf:
                    continue
                for j in range(n):
                    w = v + b[k, j]
                    if w < out[i, j]:
                        out[i, j] = w
        return out


# ---------------------------------------------------------------------------
# violation scans
#
# A delay quadruple (k,i,j,l) fails when t[k,i] + p[i,j] + t[j,l] < t[k,l] - tol;
# a sparsity quadruple fails when K[k,i] G[i,j] K[j,l] = 1 and K[k,l] = 0.
# Rows come out sorted by (k, l, i, j); columns are (k, i, j, l).
# ---------------------------------------------------------------------------


def _delay_violation_scan_np(t: np.ndarray, p: np.ndarray, tol: float):
    nu, ny = t.shape
    rows = []
    slacks = []
    for k in range(nu):
        # axes (i, j, l) for fixed k; memory stays O(n^3)
        lhs = t[k, :, None, None] + p[:, :, None] + t[None, :, :]
        bad = lhs < t[k, None, None, :] - tol
        if not bad.any():
            continue
        i, j, l = np.nonzero(bad)
        order = np.lexsort((j, i, l))
        i, j, l = i[order], j[order], l[order]
        kk = np.full(i.shape[0], k, dtype=np.int64)
        rows.append(np.stack([kk, i, j, l], axis=1))
        slacks.append(t[k, l] - lhs[i, j, l])
    if not rows:
        return np.empty((0, 4), np.int64), np.empty(0, np.float64)
    return np.concatenate(rows).astype(np.int64), np.concatenate(slacks)


if HAVE_NUMBA:

    @njit(cache=True)
    def _delay_violation_scan_nb(t, p, tol):
        nu, ny = t.shape
        count = 0
        for k in range(nu):
            for l in range(ny):
                bound = t[k, l] - tol
                for i in range(ny):
                    for j in range(nu):
                        if t[k, i] + p[i, j] + t[j, l] < bound:
                            count += 1
        idx = np.empty((count, 4), np.int64)
        slack = np.empty(count, np.float64)
        c = 0
        for k in range(nu):
            for l in range(ny):
                bound = t[k, l] - tol
                for i in range(ny):
                    for j in range(nu):
                        lhs = t[k, i] + p[i, j] + t[j, l]
                        if lhs < bound:
                            idx[c, 0] = k
                            idx[c, 1] = i
                            idx[c, 2] = j
                            idx[c, 3] = l
                            slack[c] = t[k, l] - lhs
                            c += 1
        return idx, slack


def _sparsity_violation_scan_np(kmat: np.ndarray, g: np.ndarray):
    nu, ny = kmat.shape
    kb = kmat.astype(bool)
    gb = g.astype(bool)
    rows = []
    for k in range(nu):
        hit = kb[k, :, None, None] & gb[:, :, None] & kb[None, :, :] & ~kb[k, None, None, :]
        if not hit.any():
            continue
        i, j, l = np.nonzero(hit)
        order = np.lexsort((j, i, l))
        i, j, l = i[order], j[order], l[order]
        kk = np.full(i.shape[0], k, dtype=np.int64)
        rows.append(np.stack([kk, i, j, l], axis=1))
    if not rows:
        return np.empty((0, 4), np.int64)
    return np.concatenate(rows).astype(np.int64)


if HAVE_NUMBA:

    @njit(cache=True)
    def _sparsity_violation_scan_nb(kmat, g):
        nu, ny = kmat.shape
        count = 0
        for k in range(nu):
            for l in range(ny):
                if kmat[k, l]:
                    continue
                for i in range(ny):
                    if not kmat[k, i]:
                        continue
                    for j in range(nu):
                        if g[i, j] and kmat[j, l]:
                            count += 1
        idx = np.empty((count, 4), np.int64)
        c = 0
        for k in range(nu):
            for l in range(ny):
                if kmat[k, l]:
                    continue
                for i in range(ny):
                    if not kmat[k, i]:
                        continue
                    for j in range(nu):
                        if g[i, j] and kmat[j, l]:
                            idx[c, 0] = k
                            idx[c, 1] = i
                            idx[c, 2] = j
                            idx[c, 3] = l
                            c += 1
        return idx


# ---------------------------------------------------------------------------
# Dykstra's alternating projection onto {x : A x >= b} ∩ [lo, hi]
#
# One correction term per halfspace plus one for the box; the box is
# projected last in each sweep so returned iterates satisfy the bounds
# exactly.  Stops when the largest entry change over a sweep drops below
# tol.  Returns (x, sweeps_used, last_change).
# ---------------------------------------------------------------------------


def _dykstra_project_np(a, b, asq, lo, hi, x0, tol, max_sweeps):
    m, d = a.shape
    x = x0.astype(np.float64).copy()
    y = np.zeros((m + 1, d))
    change = np.inf
    sweeps = 0
    while sweeps < int(max_sweeps):
        sweeps += 1
        x_prev = x.copy()
        for i in range(m):
            z = x - y[i]
            gap = b[i] - a[i] @ z
            x = z + (gap / asq[i]) * a[i] if gap > 0.0 else z
            y[i] = x - z
        z = x - y[m]
        x = np.clip(z, lo, hi)
        y[m] = x - z
        change = float(np.max(np.abs(x - x_prev)))
        if change < tol:
            break
    return x, sweeps, change


if HAVE_NUMBA:

    @njit(cache=True)
    def _dykstra_project_nb(a, b, asq, lo, hi, x0, tol, max_sweeps):
        m, d = a.shape
        x = x0.copy()
        y = np.zeros((m + 1, d))
        z = np.empty(d)
        change = np.inf
        sweeps = 0
        while sweeps < max_sweeps:
            sweeps += 1
            x_prev = x.copy()
            for i in range(m):
                dot = 0.0
                for q in range(d):
                    z[q] = x[q] - y[i, q]
                    dot += a[i, q] * z[q]
                gap = b[i] - dot
                if gap > 0.0:
                    s = gap / asq[i]
                    for q in range(d):
                        x[q] = z[q] + s * a[i, q]
                else:
                    for q in range(d):
                        x[q] = z[q]
                for q in range(d):
                    y[i, q] = x[q] - z[q]
            for q in range(d):
                zq = x[q] - y[m, q]
                xq = zq
                if xq < lo[q]:
                    xq = lo[q]
                if xq > hi[q]:
                    xq = hi[q]
                x[q] = xq
                y[m, q] = xq - zq
            change = 0.0
            for q in range(d):
                c = abs(x[q] - x_prev[q])
                if c > change:
                    change = c
            if change < tol:
                break
        return x, sweeps, change


# ---------------------------------------------------------------------------
# brute-force enumeration used by the oracle
#
# Superset: fill any subset of K's zero cells, keep the feasible (Z G Z <= Z)
# candidate with fewest ones; also count how many candidates attain that
# minimum so the caller can assert uniqueness.
# Subset: clear any subset of K's one cells, keep the feasible candidate with
# most ones, breaking ties toward the lexicographically smallest row-major
# vector.
# ---------------------------------------------------------------------------


def _qi_feasible_batch(z: np.ndarray, g: np.ndarray) -> np.ndarray:
    w = (z.astype(np.int64) @ g.astype(np.int64)) > 0
    v = (w.astype(np.int64) @ z.astype(np.int64)) > 0
    return ~(v & (z == 0)).any(axis=(1, 2))


def _min_superset_enum_np(kmat, g, zr, zc):
    m, n = kmat.shape
    z = zr.shape[0]
    total = 1 << z
    base = int(kmat.sum())
    best_nnz = -1
    best_mask = 0
    n_best = 0
    chunk = 2048
    shifts = np.arange(z, dtype=np.uint32)
    for start in range(0, total, chunk):
        masks = np.arange(start, min(start + chunk, total), dtype=np.uint32)
        bits = ((masks[:, None] >> shifts[None, :]) & 1).astype(np.uint8)
        cand = np.broadcast_to(kmat, (masks.shape[0], m, n)).copy()
        if z:
            cand[:, zr, zc] = np.maximum(cand[:, zr, zc], bits)
        ok = _qi_feasible_batch(cand, g)
        if not ok.any():
            continue
        cnts = base + bits.sum(axis=1)
        for pos in np.nonzero(ok)[0]:
            cnt = int(cnts[pos])
            if best_nnz < 0 or cnt < best_nnz:
                best_nnz = cnt
                best_mask = int(masks[pos])
                n_best = 1
            elif cnt == best_nnz:
                n_best += 1
    return best_mask, best_nnz, n_best


def _max_subset_enum_np(kmat, g, orr, occ):
    m, n = kmat.shape
    z = orr.shape[0]
    total = 1 << z
    best_nnz = -1
    best_flat = np.zeros(m * n, np.uint8)
    chunk = 2048
    shifts = np.arange(z, dtype=np.uint32)
    zero_base = np.zeros((m, n), np.uint8)
    for start in range(0, total, chunk):
        masks = np.arange(start, min(start + chunk, total), dtype=np.uint32)
        cand = np.broadcast_to(zero_base, (masks.shape[0], m, n)).copy()
        if z:
            bits = ((masks[:, None] >> shifts[None, :]) & 1).astype(np.uint8)
            cand[:, orr, occ] = bits
        ok = _qi_feasible_batch(cand, g)
        for pos in np.nonzero(ok)[0]:
            flat = cand[pos].reshape(-1)
            cnt = int(flat.sum())
            if cnt > best_nnz:
                best_nnz = cnt
                best_flat = flat.copy()
            elif cnt == best_nnz:
                for q in range(flat.shape[0]):
                    if flat[q] != best_flat[q]:
                        if flat[q] < best_flat[q]:
                            best_flat = flat.copy()
                        break
    return best_flat, best_nnz


if HAVE_NUMBA:

    @njit(cache=True)
    def _min_superset_enum_nb(kmat, g, zr, zc):
        m, n = kmat.shape
        z = zr.shape[0]
        total = 1 << z
        base = 0
        for r in range(m):
            for c in range(n):
                base += kmat[r, c]
        best_nnz = -1
        best_mask = 0
        n_best = 0
        zmat = np.empty((m, n), np.uint8)
        w = np.empty((m, m), np.uint8)
        for mask in range(total):
            for r in range(m):
                for c in range(n):
                    zmat[r, c] = kmat[r, c]
            cnt = base
            for s in range(z):
                if (mask >> s) & 1:
                    zmat[zr[s], zc[s]] = 1
                    cnt += 1
            for r in range(m):
                for c in range(m):
                    val = 0
                    for q in range(n):
                        if zmat[r, q] and g[q, c]:
                            val = 1
                            break
                    w[r, c] = val
            feasible = True
            for r in range(m):
                for c in range(n):
                    if zmat[r, c] == 0:
                        for q in range(m):
                            if w[r, q] and zmat[q, c]:
                                feasible = False
                                break
                    if not feasible:
                        break
                if not feasible:
                    break
            if not feasible:
                continue
            if best_nnz < 0 or cnt < best_nnz:
                best_nnz = cnt
                best_mask = mask
                n_best = 1
            elif cnt == best_nnz:
                n_best += 1
        return best_mask, best_nnz, n_best

    @njit(cache=True)
    def _max_subset_enum_nb(kmat, g, orr, occ):
        m, n = kmat.shape
        z = orr.shape[0]
        total = 1 << z
        best_nnz = -1
        best_flat = np.zeros(m * n, np.uint8)
        zmat = np.empty((m, n), np.uint8)
        w = np.empty((m, m), np.uint8)
        for mask in range(total):
            for r in range(m):
                for c in range(n):
                    zmat[r, c] = 0
            cnt = 0
            for s in range(z):
                if (mask >> s) & 1:
                    zmat[orr[s], occ[s]] = 1
                    cnt += 1
            for r in range(m):
                for c in range(m):
                    val = 0
                    for q in range(n):
                        if zmat[r, q] and g[q, c]:
                            val = 1
                            break
                    w[r, c] = val
            feasible = True
            for r in range(m):
                for c in range(n):
                    if zmat[r, c] == 0:
                        for q in range(m):
                            if w[r, q] and zmat[q, c]:
                                feasible = False
                                break
                    if not feasible:
                        break
                if not feasible:
                    break
            if not feasible:
                continue
            if cnt > best_nnz:
                best_nnz = cnt
                for q in range(m * n):
                    best_flat[q] = zmat[q // n, q % n]
            elif cnt == best_nnz:
                for q in range(m * n):
                    fq = zmat[q // n, q % n]
                    if fq != best_flat[q]:
                        if fq < best_flat[q]:
                            for t in range(m * n):
                                best_flat[t] = zmat[t // n, t % n]
                        break
        return best_flat, best_nnz


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

IMPLS = {
    "bool_matmul": {"numpy": _bool_matmul_np},
    "minplus_matmul": {"numpy": _minplus_matmul_np},
    "delay_violation_scan": {"numpy": _delay_violation_scan_np},
    "sparsity_violation_scan": {"numpy": _sparsity_violation_scan_np},
    "dykstra_project": {"numpy": _dykstra_project_np},
    "min_superset_enum": {"numpy": _min_superset_enum_np},
    "max_subset_enum": {"numpy": _max_subset_enum_np},
}
if HAVE_NUMBA:
    IMPLS["bool_matmul"]["numba"] = _bool_matmul_nb
    IMPLS["minplus_matmul"]["numba"] = _minplus_matmul_nb
    IMPLS["delay_violation_scan"]["numba"] = _delay_violation_scan_nb
    IMPLS["sparsity_violation_scan"]["numba"] = _sparsity_violation_scan_nb
    IMPLS["dykstra_project"]["numba"] = _dykstra_project_nb
    IMPLS["min_superset_enum"]["numba"] = _min_superset_enum_nb
    IMPLS["max_subset_enum"]["numba"] = _max_subset_enum_nb

_flavour = active_backend()
bool_matmul = IMPLS["bool_matmul"][_flavour]
minplus_matmul = IMPLS["minplus_matmul"][_flavour]
delay_violation_scan = IMPLS["delay_violation_scan"][_flavour]
sparsity_violation_scan = IMPLS["sparsity_violation_scan"][_flavour]
dykstra_project = IMPLS["dykstra_project"][_flavour]
min_superset_enum = IMPLS["min_superset_enum"][_flavour]
max_subset_enum = IMPLS["max_subset_enum"][_flavour]
