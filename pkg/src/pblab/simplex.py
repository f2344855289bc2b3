"""Self-contained dense simplex solver for the package's small LPs.

Solves  max c.x  subject to  A x <= b,  x >= 0  with a two-phase
tableau method.  Bland's rule (smallest eligible index enters, smallest
basic index leaves on ties) precludes cycling, which matters because
the observability LPs are solved thousands of times inside bisections
and routinely sit on degenerate vertices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericError

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

_PIVOT_TOL = 1e-11
_COST_TOL = 1e-10
_FEAS_TOL = 1e-9


@dataclass(frozen=True)
class LpResult:
    status: str
    x: np.ndarray | None
    value: float | None


def _pivot(tableau: np.ndarray, row: int, col: int) -> None:
    tableau[row] /= tableau[row, col]
    for r in range(tableau.shape[0]):
        if r != row and tableau[r, col] != 0.0:
            tableau[r] -= tableau[r, col] * tableau[row]


def _run_simplex(
    tableau: np.ndarray,
    basis: list[int],
    allowed: np.ndarray,
    max_iter: int,
) -> str:
    """Minimize the objective in the last tableau row over ``allowed``
    columns.  Returns OPTIMAL or UNBOUNDED; raises on iteration cap."""
    n_rows = tableau.shape[0] - 1
    for _ in range(max_iter):
        costs = tableau[-1, :-1]
        entering = -1
        for j in np.flatnonzero(allowed):
            if costs[j] < -_COST_TOL:
                entering = j
                break
        if entering < 0:
            return OPTIMAL
        col = tableau[:n_rows, entering]
        rhs = tableau[:n_rows, -1]
        leaving = -1
        best = np.inf
        for r in range(n_rows):
            if col[r] > _PIVOT_TOL:
                ratio = rhs[r] / col[r]
                # Bland tie-break: smallest basic variable index leaves.
                if ratio < best - _PIVOT_TOL or (
                    ratio < best + _PIVOT_TOL
                    and (leaving < 0 or basis[r] < basis[leaving])
                ):
                    best = min(best, ratio)
                    leaving = r
        if leaving < 0:
            return UNBOUNDED
        _pivot(tableau, leaving, entering)
        basis[leaving] = entering
    raise NumericError("simplex iteration cap exceeded")


def solve_lp_max(
    c: np.ndarray,
    a_ub: np.ndarray,
    b_ub: np.ndarray,
    max_iter: int = 10_000,
) -> LpResult:
    """Maximize c.x subject to a_ub x <= b_ub and x >= 0."""
    c = np.asarray(c, dtype=float)
    a = np.atleast_2d(np.asarray(a_ub, dtype=float)).copy()
    b = np.asarray(b_ub, dtype=float).copy()
    m, n = a.shape
    if c.shape != (n,) or b.shape != (m,):
        raise ValueError("inconsistent LP dimensions")

    # Equality form A x + s = b; rows with negative b are negated and
    # get an artificial variable since their slack starts at -b < 0.
    neg = b < 0
    a[neg] *= -1.0
    b[neg] *= -1.0
    art_rows = np.flatnonzero(neg)
    k = len(art_rows)

    n_cols = n + m + k
    tableau = np.zeros((m + 1, n_cols + 1))
    tableau[:m, :n] = a
    tableau[:m, -1] = b
    basis: list[int] = []
    slack_sign = np.where(neg, -1.0, 1.0)
    for r in range(m):
        tableau[r, n + r] = slack_sign[r]
    art_of_row = {}
    for idx, r in enumerate(art_rows):
        tableau[r, n + m + idx] = 1.0
        art_of_row[r] = n + m + idx
    for r in range(m):
        basis.append(art_of_row.get(r, n + r))

    allowed = np.ones(n_cols, dtype=bool)

    if k:
        # Phase 1: minimize the sum of artificials.
        tableau[-1, n + m :] = 1.0
        for r in art_rows:
            tableau[-1] -= tableau[r]
        status = _run_simplex(tableau, basis, allowed, max_iter)
        if status != OPTIMAL or tableau[-1, -1] < -_FEAS_TOL:
            return LpResult(INFEASIBLE, None, None)
        # Drive leftover artificials out of the basis where possible.
        for r in range(m):
            if basis[r] >= n + m:
                pivot_col = -1
                for j in range(n + m):
                    if abs(tableau[r, j]) > _PIVOT_TOL:
                        pivot_col = j
                        break
                if pivot_col >= 0:
                    _pivot(tableau, r, pivot_col)
                    basis[r] = pivot_col
        allowed[n + m :] = False
        tableau[-1, :] = 0.0

    # Phase 2: minimize -c.x expressed in the current basis.
    tableau[-1, :n] = -c
    for r in range(m):
        if basis[r] < n + m and tableau[-1, basis[r]] != 0.0:
            tableau[-1] -= tableau[-1, basis[r]] * tableau[r]
    status = _run_simplex(tableau, basis, allowed, max_iter)
    if status == UNBOUNDED:
        return LpResult(UNBOUNDED, None, None)

    x = np.zeros(n_cols)
    for r in range(m):
        x[basis[r]] = tableau[r, -1]
    return LpResult(OPTIMAL, x[:n].copy(), float(tableau[-1, -1]))
