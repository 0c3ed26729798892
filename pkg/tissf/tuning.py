"""
Offline tuning pipeline for the exponential tuning function.

sample the safe part of a domain box -> evaluate h and eta at each sample ->
estimate Lipschitz constants -> assemble the robust sampled constraints
-> solve the two-variable LP in (ln eps0, lambda) -> verify on a denser,
independently seeded sample.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from utils.numerics import (
    FD_STEP_SCALE,
    central_gradient,
    grid_half_diagonal,
    grid_points,
    latin_hypercube,
    max_nearest_distance,
)

from .convex_sets import InputSet, as_vector
from .core import (
    BarrierSpec,
    Degenerate,
    DegeneracyFloors,
    PlantSpec,
    TuningParams,
    eta,
    lie_terms,
)
from .errors import (
    AllDegenerateError,
    EmptySampleSetError,
    InfeasibleTuningError,
    UnboundedTuningError,
)
from .lp_solver import Constraint2D, LpStatus, solve_2d

logger = logging.getLogger(__name__)

N_KAPPA_PROBES = 1000
EXCLUSION_WARN_FRACTION = 0.2
VERIFY_DENSITY = 10
MAX_REPORTED_VIOLATIONS = 100
# probe draws per round while looking for points inside C
_PROBE_BATCH = 4096
_PROBE_ROUNDS = 50


class SamplingMethod(str, Enum):
    GRID = "grid"
    LATIN_HYPERCUBE = "latin_hypercube"


class LipschitzMethod(str, Enum):
    GRADIENT_MAX = "gradient_max"
    PRESCRIBED = "prescribed"


@dataclass(frozen=True, eq=False)
class DomainBox:
    """Axis-aligned compact working region."""
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = as_vector(self.lo, "domain lo")
        hi = as_vector(self.hi, "domain hi")
        if lo.shape != hi.shape or lo.size == 0:
            raise ValueError(f"Domain bounds must have equal nonzero length: {lo.shape} vs {hi.shape}")
        if np.any(lo >= hi):
            raise ValueError(f"Domain needs lo < hi componentwise: lo={lo.tolist()} hi={hi.tolist()}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def n(self) -> int:
        return self.lo.size

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lo) and np.all(x <= self.hi))

    def to_dict(self) -> Dict[str, Any]:
        return {"lo": self.lo.tolist(), "hi": self.hi.tolist()}


@dataclass(frozen=True, eq=False)
class SampleSet:
    points: np.ndarray
    method: SamplingMethod
    kappa_nominal: float
    kappa_effective: float
    rejected: List[Tuple[np.ndarray, Degenerate]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class LipschitzEstimates:
    L_h: float
    L_eta: float
    method: LipschitzMethod = LipschitzMethod.PRESCRIBED

    def __post_init__(self):
        for name in ("L_h", "L_eta"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0.0):
                raise ValueError(f"{name} must be finite and nonnegative, got {value}")

    def to_dict(self) -> Dict[str, Any]:
        return {"L_h": self.L_h, "L_eta": self.L_eta, "method": self.method.value}


@dataclass(frozen=True)
class SynthesisConfig:
    """
    Knobs of the offline pipeline.

    ``size`` is the per-axis point count (int or one per axis) for grids and
    the number of points N for Latin hypercubes. ``kappa`` is required for
    Latin hypercubes and ignored for grids, whose covering radius is exact.
    """
    method: SamplingMethod = SamplingMethod.GRID
    size: Union[int, Tuple[int, ...]] = 41
    kappa: Optional[float] = None
    lambda_min: float = 1e-2
    rho: float = 1.0
    floors: DegeneracyFloors = field(default_factory=DegeneracyFloors)
    fd_step: float = FD_STEP_SCALE
    rng_seed: int = 0
    estimates: Optional[LipschitzEstimates] = None

    def __post_init__(self):
        object.__setattr__(self, "method", SamplingMethod(self.method))
        if not (self.rho >= 0.0 and math.isfinite(self.rho)):
            raise ValueError(f"rho must be finite and nonnegative, got {self.rho}")
        if not self.lambda_min > 0.0:
            raise ValueError(f"lambda_min must be positive, got {self.lambda_min}")
        if self.fd_step <= 0.0:
            raise ValueError(f"fd_step must be positive, got {self.fd_step}")
        if self.method == SamplingMethod.LATIN_HYPERCUBE:
            if self.kappa is None or self.kappa <= 0.0:
                raise ValueError("Latin-hypercube sampling needs a positive nominal kappa")
            if not isinstance(self.size, int) or self.size < 1:
                raise ValueError(f"Latin-hypercube size must be a positive integer, got {self.size}")
        else:
            counts = (self.size,) if isinstance(self.size, int) else tuple(self.size)
            if any(int(k) < 2 for k in counts):
                raise ValueError(f"Grid counts must be at least 2 per axis, got {self.size}")


@dataclass(frozen=True, eq=False)
class VerificationReport:
    min_margin: float
    worst_state: Optional[np.ndarray]
    violations: List[Tuple[np.ndarray, float]]
    n_checked: int
    n_degenerate: int

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> Dict[str, Any]:
        return {
            "min_margin": self.min_margin,
            "worst_state": None if self.worst_state is None else self.worst_state.tolist(),
            "n_violations": len(self.violations),
            "violations": [{"state": x.tolist(), "margin": m}
                           for x, m in self.violations[:MAX_REPORTED_VIOLATIONS]],
            "n_checked": self.n_checked,
            "n_degenerate": self.n_degenerate,
        }


@dataclass(frozen=True, eq=False)
class TuningLpResult:
    params: Optional[TuningParams]
    status: LpStatus
    n_constraints: int
    active_samples: Tuple[int, ...]
    min_margin: float
    kappa_nominal: float
    kappa_effective: float
    estimates: Optional[LipschitzEstimates]
    n_samples: int
    exclusions: List[Dict[str, Any]] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)
    verification: Optional[VerificationReport] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "params": None if self.params is None else self.params.to_dict(),
            "status": self.status.value,
            "n_constraints": self.n_constraints,
            "n_samples": self.n_samples,
            "active_samples": list(self.active_samples),
            "min_margin": self.min_margin,
            "kappa_nominal": self.kappa_nominal,
            "kappa_effective": self.kappa_effective,
            "lipschitz": None if self.estimates is None else self.estimates.to_dict(),
            "exclusions": self.exclusions,
            "warnings": self.warnings,
            "verification": None if self.verification is None else self.verification.to_dict(),
        }


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def _grid_counts(size, n: int) -> List[int]:
    if isinstance(size, (int, np.integer)):
        return [int(size)] * n
    counts = [int(k) for k in size]
    if len(counts) != n:
        raise ValueError(f"Grid needs {n} per-axis counts, got {len(counts)}")
    return counts


def _barrier_values(barrier: BarrierSpec, points: np.ndarray) -> np.ndarray:
    return np.array([barrier.value(x) for x in points], dtype=float)


def _probe_safe_set(domain: DomainBox, barrier: BarrierSpec, seed, n_probes: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    found: List[np.ndarray] = []
    total = 0
    for _ in range(_PROBE_ROUNDS):
        batch = rng.uniform(domain.lo, domain.hi, size=(_PROBE_BATCH, domain.n))
        inside = batch[_barrier_values(barrier, batch) >= 0.0]
        found.append(inside)
        total += len(inside)
        if total >= n_probes:
            break
    if not found:
        return np.empty((0, domain.n))
    return np.vstack(found)[:n_probes]


def sample_covering(domain: DomainBox, barrier: BarrierSpec, method: SamplingMethod,
                    size_param, rng_seed: int, kappa: Optional[float] = None,
                    n_probes: int = N_KAPPA_PROBES) -> SampleSet:
    """
    Cover the safe part of ``domain`` with samples.

    Grid: ``size_param`` holds per-axis counts and kappa_nominal is half the
    cell diagonal. Latin hypercube: ``size_param`` is N and ``kappa`` is the
    caller's nominal covering radius. Either way kappa_effective is the
    largest distance from a seeded probe in C to its nearest sample.

    Raises:
        EmptySampleSetError: no sample satisfies h(x) >= 0.
    """
    method = SamplingMethod(method)
    sample_seed, probe_seed = np.random.SeedSequence(rng_seed).spawn(2)
    if method == SamplingMethod.GRID:
        counts = _grid_counts(size_param, domain.n)
        points = grid_points(domain.lo, domain.hi, counts)
        kappa_nominal = grid_half_diagonal(domain.lo, domain.hi, counts)
    else:
        if kappa is None or kappa <= 0.0:
            raise ValueError("Latin-hypercube sampling needs a positive nominal kappa")
        points = latin_hypercube(domain.lo, domain.hi, int(size_param), sample_seed)
        kappa_nominal = float(kappa)

    points = points[_barrier_values(barrier, points) >= 0.0]
    if len(points) == 0:
        raise EmptySampleSetError(
            f"No {method.value} sample of the domain {domain.to_dict()} satisfies h >= 0"
        )

    probes = _probe_safe_set(domain, barrier, probe_seed, n_probes)
    kappa_effective = max_nearest_distance(points, probes)
    logger.info("[TUNING] %d %s samples in C, kappa nominal=%.4g effective=%.4g",
                len(points), method.value, kappa_nominal, kappa_effective)
    if method == SamplingMethod.LATIN_HYPERCUBE and kappa_effective > kappa_nominal:
        logger.warning("[TUNING] effective covering radius %.4g exceeds nominal kappa %.4g",
                       kappa_effective, kappa_nominal)
    return SampleSet(points, method, kappa_nominal, kappa_effective)


# ---------------------------------------------------------------------------
# constraint data
# ---------------------------------------------------------------------------

def _eta_at(plant: PlantSpec, barrier: BarrierSpec, input_set: InputSet,
            floors: DegeneracyFloors, x: np.ndarray) -> Union[float, Degenerate]:
    c, d = lie_terms(plant, barrier, x)
    return eta(c, d, input_set, floors)


def estimate_lipschitz(plant: PlantSpec, barrier: BarrierSpec, input_set: InputSet,
                       samples: Union[SampleSet, np.ndarray], fd_step: float = FD_STEP_SCALE,
                       floors: DegeneracyFloors = DegeneracyFloors(),
                       prescribed: Optional[LipschitzEstimates] = None) -> LipschitzEstimates:
    """
    Largest finite-difference gradient norms of h and eta over the samples.

    Samples whose eta (or an eta evaluation of the difference stencil) is
    degenerate are skipped. A ``prescribed`` estimate is returned unchanged.

    Raises:
        AllDegenerateError: every sample was skipped.
    """
    if prescribed is not None:
        return replace(prescribed, method=LipschitzMethod.PRESCRIBED)

    points = samples.points if isinstance(samples, SampleSet) else np.atleast_2d(samples)
    L_h = 0.0
    L_eta = 0.0
    used = 0

    def eta_value(y: np.ndarray) -> float:
        value = _eta_at(plant, barrier, input_set, floors, y)
        return math.nan if isinstance(value, Degenerate) else value

    for x in points:
        if isinstance(_eta_at(plant, barrier, input_set, floors, x), Degenerate):
            continue
        grad_eta = central_gradient(eta_value, x, fd_step)
        if not np.all(np.isfinite(grad_eta)):
            continue
        grad_h = central_gradient(barrier.value, x, fd_step)
        L_h = max(L_h, float(np.linalg.norm(grad_h)))
        L_eta = max(L_eta, float(np.linalg.norm(grad_eta)))
        used += 1

    if used == 0:
        raise AllDegenerateError(f"All {len(points)} samples hit the degeneracy floors")
    logger.info("[TUNING] Lipschitz estimates from %d samples: L_h=%.4g L_eta=%.4g",
                used, L_h, L_eta)
    return LipschitzEstimates(L_h, L_eta, LipschitzMethod.GRADIENT_MAX)


def assemble_constraints(samples: Sequence, eta_values: Sequence[float],
                         h_values: Sequence[float], estimates: LipschitzEstimates,
                         kappa: float, lambda_min: float) -> List[Constraint2D]:
    """
    Robust sampled constraints in (ln eps0, lambda):

        ln eps0 + lambda (h_i - L_h kappa) >= eta_i + L_eta kappa

    one per sample, followed by lambda >= lambda_min.
    """
    if not (len(samples) == len(eta_values) == len(h_values)):
        raise ValueError("samples, eta_values and h_values must be aligned")
    h_shift = estimates.L_h * kappa
    eta_shift = estimates.L_eta * kappa
    rows: List[Constraint2D] = [
        (1.0, float(h) - h_shift, float(e) + eta_shift) for h, e in zip(h_values, eta_values)
    ]
    rows.append((0.0, 1.0, float(lambda_min)))
    return rows


# ---------------------------------------------------------------------------
# synthesis and verification
# ---------------------------------------------------------------------------

def _verification_samples(domain: DomainBox, barrier: BarrierSpec, config: SynthesisConfig,
                          kappa_nominal: float) -> SampleSet:
    if config.method == SamplingMethod.GRID:
        counts = _grid_counts(config.size, domain.n)
        factor = VERIFY_DENSITY ** (1.0 / domain.n)
        dense = [int(math.ceil(k * factor)) for k in counts]
        return sample_covering(domain, barrier, SamplingMethod.GRID, dense, config.rng_seed + 1)
    return sample_covering(domain, barrier, SamplingMethod.LATIN_HYPERCUBE,
                           VERIFY_DENSITY * int(config.size), config.rng_seed + 1,
                           kappa=kappa_nominal)


def synthesize(domain: DomainBox, plant: PlantSpec, barrier: BarrierSpec,
               input_set: InputSet, config: SynthesisConfig) -> TuningLpResult:
    """
    Run the whole offline pipeline and verify the result.

    Raises:
        EmptySampleSetError: no sample lies in C.
        AllDegenerateError: every sample hit the degeneracy floors.
        InfeasibleTuningError: the robust constraints admit no parameter pair.
        UnboundedTuningError: the LP objective is unbounded below.
    """
    logger.info("[TUNING] synthesizing for plant '%s' over %s", plant.label, domain.to_dict())
    sample_set = sample_covering(domain, barrier, config.method, config.size,
                                 config.rng_seed, kappa=config.kappa)

    kept_index: List[int] = []
    h_values: List[float] = []
    eta_values: List[float] = []
    rejected: List[Tuple[np.ndarray, Degenerate]] = []
    for i, x in enumerate(sample_set.points):
        value = _eta_at(plant, barrier, input_set, config.floors, x)
        if isinstance(value, Degenerate):
            rejected.append((x, value))
            continue
        kept_index.append(i)
        h_values.append(barrier.value(x))
        eta_values.append(value)
    sample_set = replace(sample_set, rejected=rejected)

    exclusions = [{"state": x.tolist(), "reason": r.reason, "value": r.value} for x, r in rejected]
    warnings: List[str] = []
    excluded_fraction = len(rejected) / len(sample_set)
    if excluded_fraction > EXCLUSION_WARN_FRACTION:
        message = (f"{len(rejected)} of {len(sample_set)} samples "
                   f"({100.0 * excluded_fraction:.1f}%) excluded as degenerate")
        logger.warning("[TUNING] %s", message)
        warnings.append(message)
    if not kept_index:
        raise AllDegenerateError(f"All {len(sample_set)} samples hit the degeneracy floors")

    kept_points = sample_set.points[kept_index]
    estimates = estimate_lipschitz(plant, barrier, input_set, kept_points, config.fd_step,
                                   config.floors, prescribed=config.estimates)
    kappa = sample_set.kappa_nominal
    constraints = assemble_constraints(kept_points, eta_values, h_values, estimates,
                                       kappa, config.lambda_min)
    solution = solve_2d(constraints, (1.0, config.rho))

    partial = TuningLpResult(
        params=None,
        status=solution.status,
        n_constraints=len(constraints),
        active_samples=(),
        min_margin=float("nan"),
        kappa_nominal=kappa,
        kappa_effective=sample_set.kappa_effective,
        estimates=estimates,
        n_samples=len(sample_set),
        exclusions=exclusions,
        warnings=warnings,
    )
    if solution.status == LpStatus.INFEASIBLE:
        raise InfeasibleTuningError(
            f"No (ln eps0, lambda) satisfies {len(constraints)} robust constraints "
            f"(kappa={kappa:.4g}, L_h={estimates.L_h:.4g}, L_eta={estimates.L_eta:.4g})",
            result=partial,
        )
    if solution.status == LpStatus.UNBOUNDED:
        raise UnboundedTuningError(
            f"Tuning LP is unbounded for rho={config.rho:g}; increase rho", result=partial
        )

    ln_eps0, lam = (float(v) for v in solution.x)
    params = TuningParams(ln_eps0, max(lam, config.lambda_min), config.lambda_min)
    active = tuple(kept_index[i] for i in solution.active_rows if i < len(kept_index))
    logger.info("[TUNING] LP solved: ln_eps0=%.6g (eps0=%.4g) lambda=%.6g, %d active samples",
                params.ln_eps0, params.eps0, params.lam, len(active))

    verify_set = _verification_samples(domain, barrier, config, kappa)
    report = verify_compatibility(params, plant, barrier, input_set, verify_set, config.floors)
    if report.violations:
        message = (f"verification found {len(report.violations)} violations on "
                   f"{report.n_checked} samples (min margin {report.min_margin:.3e})")
        logger.warning("[TUNING] %s", message)
        warnings.append(message)

    return replace(partial, params=params, active_samples=active,
                   min_margin=report.min_margin, verification=report)


def verify_compatibility(params: TuningParams, plant: PlantSpec, barrier: BarrierSpec,
                         input_set: InputSet, samples: Union[SampleSet, np.ndarray],
                         floors: DegeneracyFloors = DegeneracyFloors()) -> VerificationReport:
    """margin(x) = ln eps0 + lambda h(x) - eta(x) at every non-degenerate sample."""
    points = samples.points if isinstance(samples, SampleSet) else np.atleast_2d(samples)
    min_margin = math.inf
    worst_state: Optional[np.ndarray] = None
    violations: List[Tuple[np.ndarray, float]] = []
    n_degenerate = 0
    for x in points:
        value = _eta_at(plant, barrier, input_set, floors, x)
        if isinstance(value, Degenerate):
            n_degenerate += 1
            continue
        margin = params.ln_eps0 + params.lam * barrier.value(x) - value
        if margin < min_margin:
            min_margin = margin
            worst_state = np.array(x, dtype=float)
        if margin < 0.0:
            violations.append((np.array(x, dtype=float), float(margin)))
    logger.info("[TUNING] verified %d samples: min margin %.4g, %d violations",
                len(points) - n_degenerate, min_margin, len(violations))
    return VerificationReport(float(min_margin), worst_state, violations,
                              len(points) - n_degenerate, n_degenerate)
