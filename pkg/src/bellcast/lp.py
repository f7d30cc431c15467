"""Phase-1 simplex for ``A x = b, x >= 0`` with Farkas certificates.

Dense tableau, Bland's rule throughout.  The membership LPs here are small
(at most a few hundred rows, a few thousand columns) and highly degenerate,
which is exactly where Bland's rule earns its keep.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class LPError(RuntimeError):
    """Numerical failure of the simplex; distinct from infeasibility."""


@dataclass(frozen=True)
class FeasibilityResult:
    feasible: bool
    x: np.ndarray | None
    # y with y @ A <= 0 and y @ b > 0, only when infeasible
    certificate: np.ndarray | None
    infeasibility: float
    iterations: int

    def residual(self, A: np.ndarray, b: np.ndarray) -> float:
        if self.x is None:
            return float("inf")
        return float(np.max(np.abs(A @ self.x - b)))


def lp_feasibility(A, b, tol: float = 1e-7, *, pivot_tol: float = 1e-11,
                   presolve: bool = True, max_iterations: int | None = None) -> FeasibilityResult:
    """Decide whether ``A x = b`` has a solution with ``x >= 0``.

    Phase 1 minimizes the sum of artificial variables.  If the optimum exceeds
    ``tol`` the system is declared infeasible and a certificate ``y`` is
    returned with ``y @ A <= pivot_tol`` componentwise and ``y @ b`` equal to
    the phase-1 optimum.

    With ``presolve``, rows with ``b_k == 0`` and a nonnegative row of ``A``
    force every column that is positive there to zero; those columns and rows
    are removed before the simplex runs, and the certificate is extended back.
    """
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float).ravel()
    if A.ndim != 2 or A.shape[0] != b.size:
        raise ValueError(f"shape mismatch: A {A.shape}, b {b.shape}")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
        raise ValueError("A and b must be finite")
    m, n = A.shape
    zero_rows = (b == 0) & np.all(A >= 0, axis=1) if presolve else np.zeros(m, bool)
    if not zero_rows.any():
        return _phase1(A, b, tol, pivot_tol, max_iterations)

    dropped = np.any(A[zero_rows] > 0, axis=0)
    keep_rows = ~zero_rows
    keep_cols = ~dropped
    sub = _phase1(A[np.ix_(keep_rows, keep_cols)], b[keep_rows], tol, pivot_tol, max_iterations)
    if sub.feasible:
        x = np.zeros(n)
        x[keep_cols] = sub.x
        return FeasibilityResult(True, x, None, sub.infeasibility, sub.iterations)
    y = np.zeros(m)
    y[keep_rows] = sub.certificate
    if dropped.any():
        # lowering y on the zero rows leaves y @ b unchanged and pushes dropped columns below 0
        excess = y @ A[:, dropped]
        weight = A[np.ix_(zero_rows, dropped)].sum(axis=0)
        y[zero_rows] -= float(np.max(np.maximum(excess, 0.0) / weight))
    return FeasibilityResult(False, None, y, sub.infeasibility, sub.iterations)


def _phase1(A, b, tol, pivot_tol, max_iterations) -> FeasibilityResult:
    m, n = A.shape
    flip = np.where(b < 0, -1.0, 1.0)
    tab = np.zeros((m + 1, n + m + 1))
    tab[:m, :n] = A * flip[:, None]
    tab[:m, n:n + m] = np.eye(m)
    tab[:m, -1] = b * flip
    # reduced-cost row for minimizing the artificial sum; last entry is -objective
    tab[m, :n] = -tab[:m, :n].sum(axis=0)
    tab[m, -1] = -tab[:m, -1].sum()
    basis = np.arange(n, n + m)
    limit = 50 * (m + n) + 1000 if max_iterations is None else max_iterations

    it = 0
    while True:
        candidates = np.flatnonzero(tab[m, :n + m] < -pivot_tol)
        if candidates.size == 0:
            break
        j = int(candidates[0])
        col = tab[:m, j]
        rows = np.flatnonzero(col > pivot_tol)
        if rows.size == 0:
            # phase-1 objective is bounded below by 0, so this is numerical breakdown
            raise LPError("phase-1 objective unbounded")
        ratios = tab[rows, -1] / col[rows]
        best = ratios.min()
        tied = rows[ratios <= best + pivot_tol * max(1.0, abs(best))]
        i = int(tied[np.argmin(basis[tied])])
        _pivot(tab, i, j)
        basis[i] = j
        it += 1
        if it > limit:
            raise LPError(f"simplex exceeded {limit} iterations (cycling guard)")

    objective = float(-tab[m, -1])
    if objective > tol:
        # reduced cost of artificial k is 1 - y_k
        y = (1.0 - tab[m, n:n + m]) * flip
        return FeasibilityResult(False, None, y, objective, it)
    x = np.zeros(n)
    structural = basis < n
    x[basis[structural]] = np.maximum(tab[:m, -1][structural], 0.0)
    return FeasibilityResult(True, x, None, max(objective, 0.0), it)


def _pivot(tab: np.ndarray, i: int, j: int) -> None:
    tab[i] /= tab[i, j]
    col = tab[:, j].copy()
    col[i] = 0.0
    # membership columns are sparse 0/1 vectors; touch only rows that change
    rows = np.flatnonzero(col)
    if rows.size:
        tab[rows] -= col[rows, None] * tab[i]
