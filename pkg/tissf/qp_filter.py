"""
Online safety-filter QP.

    minimize    1/2 ||u - q||^2
    subject to  d.u >= rhs,  u in U

With a single half-space and a projectable U the problem has a scalar dual:
u(mu) = P_U(q + mu d) and the gap g(mu) = d.u(mu) - rhs is nondecreasing in
mu, so the smallest mu with g(mu) >= 0 is found by doubling and bisection.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from utils.numerics import grid_points

from .convex_sets import BallSet, BoxSet, InputSet, as_vector
from .errors import DimensionTooLargeError, NonFiniteError

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
MU_CAP = 1e12
POLISH_WINDOW = 1e-6
MAX_ORACLE_DIM = 3


class QpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE_CERTIFICATE = "infeasible_certificate"


@dataclass(frozen=True, eq=False)
class QpInstance:
    """One filter problem: nominal input q, TISSf row d and right-hand side rhs."""
    q: np.ndarray
    d: np.ndarray
    rhs: float
    input_set: InputSet

    def __post_init__(self):
        q = as_vector(self.q, "nominal input")
        d = as_vector(self.d, "TISSf row")
        if q.shape != d.shape:
            raise ValueError(f"q and d disagree in length: {q.size} vs {d.size}")
        dim = self.input_set.dim
        if dim is not None and dim != q.size:
            raise ValueError(f"Input set has dimension {dim}, instance has {q.size}")
        if not np.isfinite(self.rhs):
            raise NonFiniteError(f"QP right-hand side is not finite: {self.rhs}")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "rhs", float(self.rhs))


@dataclass(frozen=True, eq=False)
class QpResult:
    u_star: np.ndarray
    mu: float
    status: QpStatus
    tissf_slack: float
    set_violation: float
    # sigma_U(d), the best d.u any member of U can reach; set on certificates
    achievable: Optional[float] = None

    @property
    def is_optimal(self) -> bool:
        return self.status == QpStatus.OPTIMAL


def _result(inst: QpInstance, u: np.ndarray, mu: float, status: QpStatus,
            achievable: Optional[float] = None) -> QpResult:
    return QpResult(
        u_star=u,
        mu=float(mu),
        status=status,
        tissf_slack=float(inst.d @ u - inst.rhs),
        set_violation=inst.input_set.violation(u),
        achievable=achievable,
    )


def _certificate(inst: QpInstance, sigma: float) -> QpResult:
    u = inst.input_set.support_point(inst.d)
    logger.debug("[QP] infeasible: rhs=%.6g exceeds sigma=%.6g", inst.rhs, sigma)
    return _result(inst, u, 0.0, QpStatus.INFEASIBLE_CERTIFICATE, achievable=sigma)


def candidate(inst: QpInstance, mu: float) -> np.ndarray:
    """u(mu) = P_U(q + mu d)"""
    return inst.input_set.project(inst.q + mu * inst.d)


def gap(inst: QpInstance, mu: float) -> float:
    """g(mu) = d.u(mu) - rhs, nondecreasing in mu."""
    return float(inst.d @ candidate(inst, mu)) - inst.rhs


def _polish(inst: QpInstance, u: np.ndarray, sigma: float) -> np.ndarray:
    """Move u toward the support point just far enough to close a tiny negative slack."""
    slack = float(inst.d @ u) - inst.rhs
    if not (-POLISH_WINDOW < slack < 0.0):
        return u
    target = inst.input_set.support_point(inst.d)
    room = sigma - float(inst.d @ u)
    if room <= 0.0:
        return u
    theta = min(1.0, -slack / room)
    return u + theta * (target - u)


def solve_safety_qp(inst: QpInstance, tol: float = DEFAULT_TOL) -> QpResult:
    """
    Solve the filter QP by scalar dual bisection.

    Args:
        inst: the QP instance
        tol: width of the final bracket on mu

    Returns:
        QpResult with status OPTIMAL, or INFEASIBLE_CERTIFICATE when
        rhs > sigma_U(d) + tol (no member of U meets the half-space).
    """
    if tol <= 0.0:
        raise ValueError(f"tol must be positive, got {tol}")
    d_norm2 = float(inst.d @ inst.d)

    if d_norm2 == 0.0:
        # the constraint reads 0 >= rhs and does not involve u
        if inst.rhs <= 0.0:
            return _result(inst, inst.input_set.project(inst.q), 0.0, QpStatus.OPTIMAL)
        return _certificate(inst, 0.0)

    sigma = inst.input_set.support_value(inst.d)
    if inst.rhs > sigma + tol:
        return _certificate(inst, sigma)

    u0 = candidate(inst, 0.0)
    if float(inst.d @ u0) - inst.rhs >= 0.0:
        return _result(inst, u0, 0.0, QpStatus.OPTIMAL)

    lo, hi = 0.0, 1.0
    while gap(inst, hi) < 0.0:
        lo, hi = hi, 2.0 * hi
        if hi > MU_CAP:
            # rhs is within tol of sigma: only the support face meets the half-space
            u = inst.input_set.support_point(inst.d)
            logger.debug("[QP] mu cap reached; returning support point (slack %.3e)",
                         float(inst.d @ u) - inst.rhs)
            return _result(inst, u, MU_CAP, QpStatus.OPTIMAL)

    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if gap(inst, mid) >= 0.0:
            hi = mid
        else:
            lo = mid

    u = _polish(inst, candidate(inst, hi), sigma)
    return _result(inst, u, hi, QpStatus.OPTIMAL)


def brute_force_qp(inst: QpInstance, grid_points_per_dim: int) -> QpResult:
    """
    Exhaustive grid minimizer of 1/2 ||u - q||^2 over the feasible grid points.

    Test oracle only. The grid spans the set's bounding box and points
    outside U or the half-space are rejected. ``mu`` is not estimated and is
    reported as NaN.

    Raises:
        DimensionTooLargeError: more than three input dimensions.
    """
    m = inst.q.size
    if m > MAX_ORACLE_DIM:
        raise DimensionTooLargeError(f"Grid oracle supports m <= {MAX_ORACLE_DIM}, got m={m}")
    if not isinstance(inst.input_set, (BoxSet, BallSet)):
        raise TypeError(f"Grid oracle supports box and ball sets, got {type(inst.input_set).__name__}")
    if grid_points_per_dim < 2:
        raise ValueError("grid_points_per_dim must be at least 2")

    lo, hi = inst.input_set.bounding_box(m)
    U = grid_points(lo, hi, [grid_points_per_dim] * m)

    if isinstance(inst.input_set, BallSet):
        in_set = np.linalg.norm(U, axis=1) <= inst.input_set.gamma
    else:
        in_set = np.all((U >= inst.input_set.lo) & (U <= inst.input_set.hi), axis=1)
    U = U[in_set]
    feasible = U @ inst.d >= inst.rhs

    if not np.any(feasible):
        achievable = float(np.max(U @ inst.d)) if len(U) else float("-inf")
        best = U[int(np.argmax(U @ inst.d))] if len(U) else inst.input_set.support_point(inst.d)
        return _result(inst, best, float("nan"), QpStatus.INFEASIBLE_CERTIFICATE,
                       achievable=achievable)

    candidates = U[feasible]
    distances = np.sum((candidates - inst.q) ** 2, axis=1)
    u = candidates[int(np.argmin(distances))].copy()
    return _result(inst, u, float("nan"), QpStatus.OPTIMAL)
