"""
Compact convex input sets: Euclidean ball, box and polyhedron.

Each set answers four questions about itself: its support value and a
support point along a direction, the Euclidean projection of a point, and
membership within a tolerance.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np

from .errors import InvalidSetError, LpUnboundedError, MaxIterationsError, NonFiniteError
from .lp_solver import LpProblem, LpStatus, solve_simplex

logger = logging.getLogger(__name__)

DYKSTRA_TOL = 1e-9
DYKSTRA_MAX_ITER = 10_000
FINISH_EVERY = 25
ACTIVE_ROW_TOL = 1e-6
KKT_TOL = 1e-12
N_RANDOM_PROBES = 16
_PROBE_SEED = 0


def as_vector(value: Any, name: str = "vector") -> np.ndarray:
    """Return ``value`` as a finite 1-D float array or raise NonFiniteError."""
    arr = np.asarray(value, dtype=float).ravel()
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} contains NaN or inf: {arr}")
    return arr


class InputSet(ABC):
    """Nonempty compact convex subset U of R^m."""

    kind: str = ""

    @property
    @abstractmethod
    def dim(self) -> Optional[int]:
        """Input dimension, or None when the set adapts to any dimension."""

    @abstractmethod
    def support_value(self, d) -> float:
        """sigma_U(d) = max over u in U of d.u"""

    @abstractmethod
    def support_point(self, d) -> np.ndarray:
        """A maximizer u* of d.u over U."""

    @abstractmethod
    def project(self, q, tol: float = DYKSTRA_TOL) -> np.ndarray:
        """Euclidean projection of q onto U."""

    @abstractmethod
    def contains(self, u, tol: float = 0.0) -> bool:
        """True iff u satisfies the defining inequalities within ``tol``."""

    @abstractmethod
    def violation(self, u) -> float:
        """Largest violation of the defining inequalities (0 inside U)."""

    @abstractmethod
    def to_dict(self) -> Dict[str, Any]:
        """JSON-ready representation."""


@dataclass(frozen=True)
class BallSet(InputSet):
    """{u : ||u||_2 <= gamma}"""
    gamma: float
    kind: str = field(default="ball", init=False)

    def __post_init__(self):
        if not np.isfinite(self.gamma) or self.gamma <= 0.0:
            raise InvalidSetError(f"Ball radius must be positive and finite, got {self.gamma}")
        object.__setattr__(self, "gamma", float(self.gamma))

    @property
    def dim(self) -> Optional[int]:
        return None

    def support_value(self, d) -> float:
        d = as_vector(d, "direction")
        return self.gamma * float(np.linalg.norm(d))

    def support_point(self, d) -> np.ndarray:
        d = as_vector(d, "direction")
        norm = np.linalg.norm(d)
        if norm == 0.0:
            return np.zeros_like(d)
        return self.gamma * d / norm

    def project(self, q, tol: float = DYKSTRA_TOL) -> np.ndarray:
        q = as_vector(q, "point")
        norm = np.linalg.norm(q)
        if norm <= self.gamma:
            return q.copy()
        return q * (self.gamma / norm)

    def contains(self, u, tol: float = 0.0) -> bool:
        u = np.asarray(u, dtype=float).ravel()
        return bool(np.linalg.norm(u) <= self.gamma + tol)

    def violation(self, u) -> float:
        return max(0.0, float(np.linalg.norm(np.asarray(u, dtype=float))) - self.gamma)

    def bounding_box(self, m: int):
        return np.full(m, -self.gamma), np.full(m, self.gamma)

    def to_dict(self) -> Dict[str, Any]:
        return {"type": "ball", "gamma": self.gamma}


@dataclass(frozen=True, eq=False)
class BoxSet(InputSet):
    """{u : lo <= u <= hi} componentwise"""
    lo: np.ndarray
    hi: np.ndarray
    kind: str = field(default="box", init=False)

    def __post_init__(self):
        try:
            lo = as_vector(self.lo, "box lo")
            hi = as_vector(self.hi, "box hi")
        except NonFiniteError as exc:
            raise InvalidSetError(str(exc)) from exc
        if lo.shape != hi.shape or lo.size == 0:
            raise InvalidSetError(f"Box bounds must have equal nonzero length: {lo.shape} vs {hi.shape}")
        if np.any(lo > hi):
            raise InvalidSetError(f"Box is empty: lo={lo.tolist()} hi={hi.tolist()}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> Optional[int]:
        return self.lo.size

    def support_value(self, d) -> float:
        d = as_vector(d, "direction")
        return float(np.sum(np.maximum(d * self.hi, d * self.lo)))

    def support_point(self, d) -> np.ndarray:
        d = as_vector(d, "direction")
        if not np.any(d):
            return 0.5 * (self.lo + self.hi)
        # ties (d_i == 0) go to the upper endpoint
        return np.where(d < 0.0, self.lo, self.hi).astype(float)

    def project(self, q, tol: float = DYKSTRA_TOL) -> np.ndarray:
        q = as_vector(q, "point")
        return np.clip(q, self.lo, self.hi)

    def contains(self, u, tol: float = 0.0) -> bool:
        u = np.asarray(u, dtype=float).ravel()
        return bool(np.all(u >= self.lo - tol) and np.all(u <= self.hi + tol))

    def violation(self, u) -> float:
        u = np.asarray(u, dtype=float).ravel()
        return max(0.0, float(np.max(self.lo - u)), float(np.max(u - self.hi)))

    def bounding_box(self, m: int):
        return self.lo.copy(), self.hi.copy()

    def to_dict(self) -> Dict[str, Any]:
        return {"type": "box", "lo": self.lo.tolist(), "hi": self.hi.tolist()}


@dataclass(frozen=True, eq=False)
class PolyhedronSet(InputSet):
    """
    {u : A u <= b}, verified nonempty and bounded at construction.

    Boundedness is probed along +/- every axis and a fixed set of seeded
    random directions; the Chebyshev center found by an auxiliary LP is kept
    as the deterministic member returned for d = 0.
    """
    A: np.ndarray
    b: np.ndarray
    kind: str = field(default="polyhedron", init=False)
    center: np.ndarray = field(default=None, init=False, repr=False, compare=False)
    _row_norms2: np.ndarray = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.asarray(self.b, dtype=float).ravel()
        if A.shape[0] != b.size or A.shape[1] == 0:
            raise InvalidSetError(f"Polyhedron shapes disagree: A={A.shape}, b={b.shape}")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise InvalidSetError("Polyhedron data contains NaN or inf")
        norms2 = np.sum(A * A, axis=1)
        if np.any(norms2 == 0.0):
            raise InvalidSetError("Polyhedron has an all-zero row in A")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "_row_norms2", norms2)

        m = A.shape[1]
        feasibility = solve_simplex(LpProblem(np.zeros(m), A, b))
        if feasibility.status != LpStatus.OPTIMAL:
            raise InvalidSetError("Polyhedron is empty (LP feasibility probe failed)")

        rng = np.random.default_rng(_PROBE_SEED)
        probes = [np.eye(m)[i] * s for i in range(m) for s in (1.0, -1.0)]
        probes += list(rng.standard_normal((N_RANDOM_PROBES, m)))
        for direction in probes:
            sol = solve_simplex(LpProblem(-direction, A, b))
            if sol.status == LpStatus.UNBOUNDED:
                raise InvalidSetError(
                    f"Polyhedron is unbounded along direction {np.round(direction, 6).tolist()}"
                )

        # Chebyshev center: max r s.t. a_i.u + ||a_i|| r <= b_i, r >= 0
        G = np.vstack([
            np.hstack([A, np.sqrt(norms2)[:, None]]),
            np.hstack([np.zeros((1, m)), -np.ones((1, 1))]),
        ])
        g = np.concatenate([b, [0.0]])
        cheb = solve_simplex(LpProblem(np.concatenate([np.zeros(m), [-1.0]]), G, g))
        center = cheb.x[:m] if cheb.is_optimal else feasibility.x
        object.__setattr__(self, "center", center)

    @property
    def dim(self) -> Optional[int]:
        return self.A.shape[1]

    def _solve_support(self, d: np.ndarray):
        if d.size != self.dim:
            raise ValueError(f"Direction has length {d.size}, set dimension is {self.dim}")
        sol = solve_simplex(LpProblem(-d, self.A, self.b))
        if sol.status == LpStatus.UNBOUNDED:
            raise LpUnboundedError(
                f"Support LP unbounded along {d.tolist()}; construction probe missed it"
            )
        if sol.status == LpStatus.INFEASIBLE:
            raise InvalidSetError("Support LP infeasible for a set that passed construction")
        return sol

    def support_value(self, d) -> float:
        d = as_vector(d, "direction")
        if not np.any(d):
            return 0.0
        return -self._solve_support(d).objective

    def support_point(self, d) -> np.ndarray:
        d = as_vector(d, "direction")
        if not np.any(d):
            return self.center.copy()
        return self._solve_support(d).x

    def _finish_on_active_rows(self, q: np.ndarray, x: np.ndarray) -> Optional[np.ndarray]:
        """
        Exact projection onto the face spanned by the rows active at ``x``.

        Solves A_W A_W^T lam = A_W q - b_W, dropping rows with negative
        multipliers. The result is returned only when it satisfies the KKT
        conditions of the full projection: on the working rows, feasible
        elsewhere, lam >= 0.
        """
        A, b = self.A, self.b
        scale = 1.0 + float(np.max(np.abs(b)))
        working = [int(i) for i in np.nonzero(A @ x - b >= -ACTIVE_ROW_TOL * scale)[0]]
        while working:
            A_w = A[working]
            lam, *_ = np.linalg.lstsq(A_w @ A_w.T, A_w @ q - b[working], rcond=None)
            if np.min(lam) < -KKT_TOL:
                del working[int(np.argmin(lam))]
                continue
            u = q - A_w.T @ lam
            on_face = np.max(np.abs(A_w @ u - b[working])) <= DYKSTRA_TOL * scale
            if on_face and np.max(A @ u - b) <= KKT_TOL * scale:
                return u
            return None
        return None

    def project(self, q, tol: float = DYKSTRA_TOL) -> np.ndarray:
        """
        Dykstra's alternating projections onto the half-spaces a_i.u <= b_i.

        A sweep counts as converged only when neither the iterate nor any
        correction term moves by ``tol`` and the iterate is feasible within
        ``tol``. Every ``FINISH_EVERY`` sweeps the rows active at the
        iterate are tried as the optimal face.
        """
        q = as_vector(q, "point")
        if q.size != self.dim:
            raise ValueError(f"Point has length {q.size}, set dimension is {self.dim}")
        x = q.copy()
        if self.contains(x):
            return x
        A, b, norms2 = self.A, self.b, self._row_norms2
        increments = np.zeros_like(A)
        for sweep in range(1, DYKSTRA_MAX_ITER + 1):
            x_prev = x.copy()
            increments_prev = increments.copy()
            for i in range(A.shape[0]):
                y = x + increments[i]
                violation = A[i] @ y - b[i]
                z = y - (violation / norms2[i]) * A[i] if violation > 0.0 else y
                increments[i] = y - z
                x = z
            settled = (np.linalg.norm(x - x_prev) < tol
                       and np.max(np.abs(increments - increments_prev)) < tol)
            if settled and self.violation(x) <= tol:
                return x
            if settled or sweep % FINISH_EVERY == 0:
                exact = self._finish_on_active_rows(q, x)
                if exact is not None:
                    return exact
        raise MaxIterationsError(
            f"Dykstra projection did not converge in {DYKSTRA_MAX_ITER} sweeps"
        )

    def contains(self, u, tol: float = 0.0) -> bool:
        u = np.asarray(u, dtype=float).ravel()
        return bool(np.all(self.A @ u - self.b <= tol))

    def violation(self, u) -> float:
        u = np.asarray(u, dtype=float).ravel()
        return max(0.0, float(np.max(self.A @ u - self.b)))

    def to_dict(self) -> Dict[str, Any]:
        return {"type": "polyhedron", "A": self.A.tolist(), "b": self.b.tolist()}


def input_set_from_dict(payload: Dict[str, Any]) -> InputSet:
    """
    Build an InputSet from its JSON form.

    Accepts ``{"type": "ball", "gamma": g}``, ``{"type": "box", "lo": [...],
    "hi": [...]}`` or ``{"type": "polyhedron", "A": [[...]], "b": [...]}``.
    """
    kind = payload.get("type")
    try:
        if kind == "ball":
            return BallSet(float(payload["gamma"]))
        if kind == "box":
            return BoxSet(payload["lo"], payload["hi"])
        if kind == "polyhedron":
            return PolyhedronSet(payload["A"], payload["b"])
    except KeyError as exc:
        raise InvalidSetError(f"Input set of type '{kind}' is missing field {exc}") from exc
    raise InvalidSetError(f"Unknown input set type: {kind!r}")
