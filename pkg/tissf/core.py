"""
Core TISSf data structures and scalar formulas.

A plant is control affine, x' = f(x) + g(x) u; a barrier h with analytic
gradient defines the safe set C = {h >= 0}. From them we derive

    c(x) = L_f h(x) + alpha(h(x)),   d(x) = L_g h(x),

and the TISSf half-space d(x) u >= ||d(x)||^2 / eps(h(x)) - c(x) whose
compatibility with an input set is decided by the support function.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np

from utils.numerics import central_gradient

from .convex_sets import InputSet, as_vector
from .errors import GradientMismatchError, NonFiniteError

logger = logging.getLogger(__name__)

EPS_CAP = 1e300
DEFAULT_D_MIN = 1e-6
DEFAULT_S_MIN = 1e-6
GRADIENT_RTOL = 1e-5


@dataclass(frozen=True)
class LinearClassK:
    """Extended class-K function alpha(r) = a * r."""
    a: float = 1.0

    def __post_init__(self):
        if not (self.a > 0.0 and math.isfinite(self.a)):
            raise ValueError(f"Class-K gain must be positive and finite, got {self.a}")

    def __call__(self, r: float) -> float:
        return self.a * r

    def inverse(self, r: float) -> float:
        return r / self.a


@dataclass(frozen=True)
class PlantSpec:
    """
    Control-affine plant x' = f(x) + g(x) u.

    ``exogenous(t)`` is an optional drift added only during simulation
    (signals the controller does not model, e.g. a lead vehicle's
    acceleration). ``sync(t, x)`` may overwrite exogenous states after each
    integration step so they follow a closed-form profile exactly.
    """
    n: int
    m: int
    f: Callable[[np.ndarray], np.ndarray]
    g: Callable[[np.ndarray], np.ndarray]
    label: str
    exogenous: Optional[Callable[[float], np.ndarray]] = None
    sync: Optional[Callable[[float, np.ndarray], np.ndarray]] = None
    nonnegative_states: Tuple[int, ...] = ()

    def drift(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.f(x), dtype=float).reshape(self.n)

    def input_matrix(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.g(x), dtype=float).reshape(self.n, self.m)


@dataclass(frozen=True)
class BarrierSpec:
    """Barrier h with analytic gradient and the class-K function used in c(x)."""
    h: Callable[[np.ndarray], float]
    grad_h: Callable[[np.ndarray], np.ndarray]
    alpha: LinearClassK = field(default_factory=LinearClassK)
    label: str = ""

    def value(self, x: np.ndarray) -> float:
        return float(self.h(x))

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.grad_h(x), dtype=float).ravel()


@dataclass(frozen=True)
class TuningParams:
    """Exponential tuning function eps(h) = exp(ln_eps0 + lam * h)."""
    ln_eps0: float
    lam: float
    lambda_min: float = 1e-2

    def __post_init__(self):
        if not (math.isfinite(self.ln_eps0) and math.isfinite(self.lam)):
            raise ValueError(f"Tuning parameters must be finite: {self}")
        if self.lambda_min <= 0.0:
            raise ValueError(f"lambda_min must be positive, got {self.lambda_min}")
        if self.lam < self.lambda_min:
            raise ValueError(
                f"lambda={self.lam:g} is below lambda_min={self.lambda_min:g}; "
                "eps would not be increasing in h"
            )

    @classmethod
    def from_eps0(cls, eps0: float, lam: float, lambda_min: float = 1e-2) -> "TuningParams":
        if eps0 <= 0.0:
            raise ValueError(f"eps0 must be positive, got {eps0}")
        return cls(math.log(eps0), lam, min(lambda_min, lam))

    @property
    def eps0(self) -> float:
        return math.exp(self.ln_eps0)

    def to_dict(self) -> dict:
        return {"ln_eps0": self.ln_eps0, "eps0": self.eps0, "lambda": self.lam,
                "lambda_min": self.lambda_min}


@dataclass(frozen=True)
class Disturbance:
    """Matched perturbation omega(t) with ||omega||_inf <= delta."""
    delta: float
    signal: Callable[[float], np.ndarray]

    def __post_init__(self):
        if self.delta < 0.0:
            raise ValueError(f"Disturbance bound must be nonnegative, got {self.delta}")

    def __call__(self, t: float) -> np.ndarray:
        return np.atleast_1d(np.asarray(self.signal(t), dtype=float))

    def respects_bound(self, times: Sequence[float], tol: float = 1e-12) -> bool:
        return all(np.max(np.abs(self(t))) <= self.delta + tol for t in times)


@dataclass(frozen=True)
class IncompatibleNominal:
    """c + sigma_U(d) <= 0: no finite tuning makes the half-space meet U."""
    s: float


@dataclass(frozen=True)
class Degenerate:
    """eta is not evaluated because a degeneracy floor was hit."""
    reason: str
    value: float


@dataclass(frozen=True)
class DegeneracyFloors:
    d_min: float = DEFAULT_D_MIN
    s_min: float = DEFAULT_S_MIN

    def __post_init__(self):
        if self.d_min <= 0.0 or self.s_min <= 0.0:
            raise ValueError(f"Degeneracy floors must be positive: {self}")


def check_gradient(barrier: BarrierSpec, lo, hi, n_points: int = 100,
                   seed: int = 0, rtol: float = GRADIENT_RTOL) -> float:
    """
    Compare the analytic gradient with central finite differences.

    Points are drawn uniformly from the box [lo, hi]. Returns the worst
    relative error; raises GradientMismatchError above ``rtol``.
    """
    lo = as_vector(lo, "domain lo")
    hi = as_vector(hi, "domain hi")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for x in rng.uniform(lo, hi, size=(n_points, lo.size)):
        analytic = barrier.gradient(x)
        numeric = central_gradient(barrier.value, x)
        err = float(np.linalg.norm(analytic - numeric)) / max(1.0, float(np.linalg.norm(analytic)))
        worst = max(worst, err)
        if err > rtol:
            raise GradientMismatchError(
                f"Barrier '{barrier.label}' gradient mismatch at x={x.tolist()}: "
                f"analytic={analytic.tolist()} numeric={numeric.tolist()}"
            )
    return worst


def lie_terms(plant: PlantSpec, barrier: BarrierSpec, x) -> Tuple[float, np.ndarray]:
    """
    c(x) = grad_h . f(x) + alpha(h(x)) and d(x) = grad_h . g(x).

    Returns:
        (c, d) with d as a length-m vector
    """
    x = as_vector(x, "state")
    grad = barrier.gradient(x)
    c = float(grad @ plant.drift(x)) + barrier.alpha(barrier.value(x))
    d = grad @ plant.input_matrix(x)
    if not (math.isfinite(c) and np.all(np.isfinite(d))):
        raise NonFiniteError(f"Lie terms are not finite at x={x.tolist()}")
    return c, d


def epsilon_with_flag(params: TuningParams, h_val: float) -> Tuple[float, bool]:
    """eps(h) and whether it had to be clamped at EPS_CAP."""
    if not math.isfinite(h_val):
        raise NonFiniteError(f"h value is not finite: {h_val}")
    exponent = params.ln_eps0 + params.lam * h_val
    if exponent >= math.log(EPS_CAP):
        return EPS_CAP, True
    return math.exp(exponent), False


def epsilon(params: TuningParams, h_val: float) -> float:
    value, clamped = epsilon_with_flag(params, h_val)
    if clamped:
        logger.warning("[TISSF] eps(h=%g) overflowed; clamped at %g", h_val, EPS_CAP)
    return value


def compatibility_bound(c: float, d, input_set: InputSet) -> Union[float, IncompatibleNominal]:
    """
    Smallest eps making the TISSf half-space intersect U.

    Returns ||d||^2 / (c + sigma_U(d)) when that denominator is positive,
    0 when d = 0 and c >= 0, and IncompatibleNominal otherwise.
    """
    d = as_vector(d, "d")
    if not math.isfinite(c):
        raise NonFiniteError(f"c is not finite: {c}")
    d_norm2 = float(d @ d)
    if d_norm2 == 0.0:
        return 0.0 if c >= 0.0 else IncompatibleNominal(c)
    s = c + input_set.support_value(d)
    if s <= 0.0:
        return IncompatibleNominal(s)
    return d_norm2 / s


def eta(c: float, d, input_set: InputSet,
        floors: DegeneracyFloors = DegeneracyFloors()) -> Union[float, Degenerate]:
    """eta = ln ||d||^2 - ln(c + sigma_U(d)), or Degenerate below the floors."""
    d = as_vector(d, "d")
    d_norm = float(np.linalg.norm(d))
    if d_norm < floors.d_min:
        return Degenerate("d_norm_below_floor", d_norm)
    s = c + input_set.support_value(d)
    if s < floors.s_min:
        return Degenerate("s_below_floor", s)
    return 2.0 * math.log(d_norm) - math.log(s)


def robustness_margin(params: TuningParams, alpha: LinearClassK, h_val: float,
                      delta: float) -> float:
    """zeta(h, delta) = -alpha^{-1}(-eps(h) delta^2 / 4)"""
    if delta < 0.0:
        raise ValueError(f"delta must be nonnegative, got {delta}")
    if delta == 0.0:
        return 0.0
    return margin_from_eps(alpha, epsilon(params, h_val), delta)


def margin_from_eps(alpha: LinearClassK, eps: float, delta: float) -> float:
    if delta == 0.0:
        return 0.0
    return -alpha.inverse(-eps * delta * delta / 4.0)


def tissf_halfspace(plant: PlantSpec, barrier: BarrierSpec, params: TuningParams,
                    x) -> Tuple[np.ndarray, float]:
    """
    The TISSf constraint at x in the form d.u >= rhs.

    Returns:
        (d, rhs) with rhs = ||d||^2 / eps(h(x)) - c(x)
    """
    c, d = lie_terms(plant, barrier, x)
    eps = epsilon(params, barrier.value(as_vector(x, "state")))
    return d, halfspace_rhs(c, d, eps)


def halfspace_rhs(c: float, d: np.ndarray, eps: float) -> float:
    rhs = float(d @ d) / eps - c
    if not math.isfinite(rhs):
        raise NonFiniteError(f"TISSf right-hand side is not finite (c={c}, eps={eps})")
    return rhs
