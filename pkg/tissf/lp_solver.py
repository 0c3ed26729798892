"""
Dense linear programming.

Two solvers live here:

- ``solve_simplex``: general ``min c.x s.t. Gx <= g`` with free variables,
  slack-variable standard form, two-phase primal simplex and Bland's
  anti-cycling rule. Used for polyhedral support functions.
- ``solve_2d``: exact two-variable LP by vertex enumeration, used for the
  (ln eps0, lambda) tuning problem.

Both are deterministic: the same problem always yields bitwise-identical
output.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    DegenerateConstraintError,
    MaxIterationsError,
    NonFiniteError,
    NumericalBreakdownError,
)

logger = logging.getLogger(__name__)

FEASIBILITY_TOL = 1e-9
TIGHTNESS_TOL = 1e-8
PIVOT_TOL = 1e-12
# entries below this are treated as exact zeros after each pivot
_CHOP_TOL = 1e-13
_REDUCED_COST_TOL = 1e-11
_CHUNK = 2048


class LpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LpProblem:
    """``min c.x`` subject to ``G x <= g``; ``x`` is free."""
    c: np.ndarray
    G: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).ravel()
        G = np.atleast_2d(np.asarray(self.G, dtype=float))
        g = np.asarray(self.g, dtype=float).ravel()
        if G.size == 0:
            G = G.reshape(0, c.size)
        if G.shape[1] != c.size or G.shape[0] != g.size:
            raise ValueError(
                f"Inconsistent LP dimensions: c={c.shape}, G={G.shape}, g={g.shape}"
            )
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(G)) and np.all(np.isfinite(g))):
            raise NonFiniteError("LP data contains NaN or inf")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "g", g)

    @property
    def n_vars(self) -> int:
        return self.c.size


@dataclass(frozen=True)
class LpSolution:
    status: LpStatus
    x: Optional[np.ndarray] = None
    objective: float = float("nan")
    active_rows: Tuple[int, ...] = field(default_factory=tuple)

    @property
    def is_optimal(self) -> bool:
        return self.status == LpStatus.OPTIMAL


# ---------------------------------------------------------------------------
# general simplex
# ---------------------------------------------------------------------------

def _pivot(T: np.ndarray, basis: List[int], row: int, col: int) -> None:
    piv = T[row, col]
    if abs(piv) < PIVOT_TOL:
        raise NumericalBreakdownError(
            f"Pivot magnitude {abs(piv):.3e} below {PIVOT_TOL:g} (row {row}, col {col})"
        )
    T[row, :] /= piv
    for i in range(T.shape[0]):
        if i != row and T[i, col] != 0.0:
            T[i, :] -= T[i, col] * T[row, :]
    T[np.abs(T) < _CHOP_TOL] = 0.0
    basis[row] = col


def _run_simplex(T: np.ndarray, basis: List[int], cost: np.ndarray,
                 n_cols: int, max_iter: int) -> bool:
    """
    Iterate Bland's rule on a canonical tableau.

    Returns:
        False if the objective is unbounded below, True at optimality.
    """
    for _ in range(max_iter):
        reduced = cost[:n_cols] - cost[basis] @ T[:, :n_cols]
        entering = -1
        for j in range(n_cols):
            if reduced[j] < -_REDUCED_COST_TOL:
                entering = j
                break
        if entering < 0:
            return True

        column = T[:, entering]
        rows = np.nonzero(column > 0.0)[0]
        if rows.size == 0:
            return False
        ratios = T[rows, -1] / column[rows]
        best = ratios.min()
        ties = rows[ratios <= best + 1e-12 * (1.0 + abs(best))]
        # Bland: smallest basic variable index among tied rows
        leaving = min(ties, key=lambda r: basis[r])
        _pivot(T, basis, int(leaving), entering)
    raise MaxIterationsError(f"Simplex did not terminate within {max_iter} pivots")


def solve_simplex(problem: LpProblem) -> LpSolution:
    """
    Solve ``min c.x s.t. Gx <= g`` with a two-phase primal simplex.

    Args:
        problem: the LP; variables are free (split into x+ and x-)

    Returns:
        LpSolution. Infeasible and unbounded problems are reported through
        ``status``, never raised.
    """
    n = problem.n_vars
    G, g = problem.G, problem.g
    p = G.shape[0]

    if p == 0:
        if np.all(problem.c == 0.0):
            return LpSolution(LpStatus.OPTIMAL, np.zeros(n), 0.0, ())
        return LpSolution(LpStatus.UNBOUNDED, None, float("-inf"), ())

    # columns: x+ (n) | x- (n) | slack (p) | artificial (k)
    negative_rows = [i for i in range(p) if g[i] < 0.0]
    k = len(negative_rows)
    n_struct = 2 * n + p
    n_cols = n_struct + k
    T = np.zeros((p, n_cols + 1))
    T[:, :n] = G
    T[:, n:2 * n] = -G
    T[:, 2 * n:n_struct] = np.eye(p)
    T[:, -1] = g
    basis: List[int] = [2 * n + i for i in range(p)]
    for a, i in enumerate(negative_rows):
        T[i, :] *= -1.0
        T[i, n_struct + a] = 1.0
        basis[i] = n_struct + a

    max_iter = 50 * (p + n_cols) + 1000

    if k > 0:
        phase1_cost = np.zeros(n_cols)
        phase1_cost[n_struct:] = 1.0
        _run_simplex(T, basis, phase1_cost, n_cols, max_iter)
        infeasibility = float(phase1_cost[basis] @ T[:, -1])
        if infeasibility > FEASIBILITY_TOL * (1.0 + float(np.max(np.abs(g)))):
            logger.debug("[LP] phase 1 residual %.3e -> infeasible", infeasibility)
            return LpSolution(LpStatus.INFEASIBLE, None, float("inf"), ())

        # drive remaining artificials out of the basis
        keep_rows = []
        for i in range(p):
            if basis[i] < n_struct:
                keep_rows.append(i)
                continue
            candidates = np.nonzero(np.abs(T[i, :n_struct]) > FEASIBILITY_TOL)[0]
            if candidates.size:
                _pivot(T, basis, i, int(candidates[0]))
                keep_rows.append(i)
        T = np.hstack([T[keep_rows, :n_struct], T[keep_rows, -1:]])
        basis = [basis[i] for i in keep_rows]
        n_cols = n_struct

    cost = np.zeros(n_cols)
    cost[:n] = problem.c
    cost[n:2 * n] = -problem.c
    if not _run_simplex(T, basis, cost, n_cols, max_iter):
        return LpSolution(LpStatus.UNBOUNDED, None, float("-inf"), ())

    values = np.zeros(n_cols)
    for i, b in enumerate(basis):
        values[b] = T[i, -1]
    x = values[:n] - values[n:2 * n]
    residual = G @ x - g
    active = tuple(int(i) for i in np.nonzero(residual >= -TIGHTNESS_TOL)[0])
    return LpSolution(LpStatus.OPTIMAL, x, float(problem.c @ x), active)


# ---------------------------------------------------------------------------
# two-variable LP
# ---------------------------------------------------------------------------

Constraint2D = Tuple[float, float, float]


def _feasible_mask(A: np.ndarray, r: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Columns of Y (2 x B) that satisfy every ``A y >= r`` within tolerance."""
    slack = A @ Y - r[:, None]
    tol = FEASIBILITY_TOL * np.maximum(1.0, np.abs(r))[:, None]
    return np.all(slack >= -tol, axis=0)


def solve_2d(constraints: Sequence[Constraint2D],
             objective: Tuple[float, float]) -> LpSolution:
    """
    Exact LP in two free variables.

    Minimizes ``w1*y1 + w2*y2`` subject to ``a1*y1 + a2*y2 >= rhs`` for every
    ``(a1, a2, rhs)`` in ``constraints``. Candidates are all pairwise boundary
    intersections plus the foot point of each boundary line (covers feasible
    sets without vertices); unboundedness is decided on the recession cone.

    Raises:
        DegenerateConstraintError: a constraint reads ``0 >= rhs`` with rhs > 0.
    """
    if len(constraints) == 0:
        raise ValueError("solve_2d needs at least one constraint")
    data = np.asarray(constraints, dtype=float).reshape(-1, 3)
    w = np.asarray(objective, dtype=float).ravel()
    if not (np.all(np.isfinite(data)) and np.all(np.isfinite(w))):
        raise NonFiniteError("2-D LP data contains NaN or inf")

    zero_rows = np.all(data[:, :2] == 0.0, axis=1)
    bad = np.nonzero(zero_rows & (data[:, 2] > 0.0))[0]
    if bad.size:
        raise DegenerateConstraintError(
            f"Constraint {int(bad[0])} reads 0 >= {data[bad[0], 2]:g}"
        )
    live_index = np.nonzero(~zero_rows)[0]
    A = data[live_index, :2]
    r = data[live_index, 2]

    if A.shape[0] == 0:
        if np.all(w == 0.0):
            return LpSolution(LpStatus.OPTIMAL, np.zeros(2), 0.0, ())
        return LpSolution(LpStatus.UNBOUNDED, None, float("-inf"), ())

    # candidate points
    k = A.shape[0]
    ii, jj = np.triu_indices(k, 1)
    det = A[ii, 0] * A[jj, 1] - A[ii, 1] * A[jj, 0]
    ok = np.abs(det) > PIVOT_TOL
    ii, jj, det = ii[ok], jj[ok], det[ok]
    y1 = (r[ii] * A[jj, 1] - A[ii, 1] * r[jj]) / det
    y2 = (A[ii, 0] * r[jj] - r[ii] * A[jj, 0]) / det
    norms2 = np.sum(A * A, axis=1)
    feet = A * (r / norms2)[:, None]
    Y = np.vstack([np.column_stack([y1, y2]), feet])
    finite = np.all(np.isfinite(Y), axis=1)
    Y = Y[finite]

    obj = Y @ w
    order = np.lexsort((Y[:, 1], Y[:, 0], obj))
    best_index = -1
    for start in range(0, order.size, _CHUNK):
        chunk = order[start:start + _CHUNK]
        mask = _feasible_mask(A, r, Y[chunk].T)
        if np.any(mask):
            best_index = int(chunk[np.argmax(mask)])
            break
    if best_index < 0:
        return LpSolution(LpStatus.INFEASIBLE, None, float("inf"), ())

    # recession cone: extreme rays are boundary directions, or -w itself
    perp = np.column_stack([-A[:, 1], A[:, 0]])
    rays = np.vstack([perp, -perp, -w[None, :]])
    ray_norm = np.linalg.norm(rays, axis=1)
    rays = rays[ray_norm > 0.0] / ray_norm[ray_norm > 0.0][:, None]
    in_cone = np.all(A @ rays.T >= -PIVOT_TOL, axis=0)
    descending = rays @ w < -PIVOT_TOL
    if np.any(in_cone & descending):
        return LpSolution(LpStatus.UNBOUNDED, None, float("-inf"), ())

    # lexicographic tie-break among (numerically) equal objectives
    best_obj = obj[best_index]
    tie_tol = 1e-12 * (1.0 + abs(best_obj))
    window = order[np.abs(obj[order] - best_obj) <= tie_tol]
    window = window[_feasible_mask(A, r, Y[window].T)]
    chosen = min(window, key=lambda idx: (Y[idx, 0], Y[idx, 1]))
    y = Y[chosen].copy()

    slack = data[:, :2] @ y - data[:, 2]
    active = tuple(int(i) for i in np.nonzero(np.abs(slack) <= TIGHTNESS_TOL * np.maximum(1.0, np.abs(data[:, 2])))[0])
    return LpSolution(LpStatus.OPTIMAL, y, float(w @ y), active)
