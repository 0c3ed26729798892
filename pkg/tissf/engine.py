"""
Fixed-step closed-loop simulator.

The controller is evaluated at every integration step and its output is
held over [t, t + dt] (zero-order hold); the perturbed dynamics

    x' = f(x) + g(x) (u + w(t)) + e(t)

are advanced with classical RK4, where w is the matched perturbation and e
the plant's exogenous drift (if any), both evaluated at the RK4 sub-times.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .convex_sets import as_vector
from .core import (
    LinearClassK,
    TuningParams,
    epsilon_with_flag,
    halfspace_rhs,
    lie_terms,
    margin_from_eps,
)
from .errors import NonFiniteStateError, ScenarioFailure
from .plants import CaseStudy
from .qp_filter import QpInstance, QpResult, QpStatus, solve_safety_qp
from .registry import get_case

logger = logging.getLogger(__name__)

INPUT_TOL = 1e-6
NO_QP = "none"


# ---------------------------------------------------------------------------
# controller variants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LpQpFilter:
    """QP safety filter with LP-synthesized tuning parameters."""
    params: TuningParams
    kind: str = field(default="lp_qp_filter", init=False)


@dataclass(frozen=True)
class _EpsParams:
    eps0: float
    lam: float

    def __post_init__(self):
        if not (self.eps0 > 0.0 and math.isfinite(self.eps0)):
            raise ValueError(f"eps0 must be positive and finite, got {self.eps0}")
        if not self.lam > 0.0:
            raise ValueError(f"lambda must be positive, got {self.lam}")

    @property
    def params(self) -> TuningParams:
        return TuningParams.from_eps0(self.eps0, self.lam)


@dataclass(frozen=True)
class TrialParams(_EpsParams):
    """QP safety filter with hand-picked (eps0, lambda)."""
    kind: str = field(default="trial_params", init=False)


@dataclass(frozen=True)
class BaselineFixedForm(_EpsParams):
    """u = k_nom(x) + d(x)^T / eps(h(x)), no input clipping."""
    kind: str = field(default="baseline_fixed_form", init=False)


@dataclass(frozen=True)
class BaselineSaturated(_EpsParams):
    """The fixed-form law projected onto U."""
    kind: str = field(default="baseline_saturated", init=False)


@dataclass(frozen=True)
class NominalOnly:
    """k_nom(x) applied unfiltered."""
    kind: str = field(default="nominal_only", init=False)


ControllerVariant = Union[LpQpFilter, TrialParams, BaselineFixedForm, BaselineSaturated, NominalOnly]


@dataclass(frozen=True, eq=False)
class ScenarioConfig:
    plant: str
    controller: ControllerVariant
    x0: Optional[np.ndarray] = None
    t_end: float = 20.0
    dt: float = 1e-3
    alpha: LinearClassK = field(default_factory=LinearClassK)
    record_every: int = 1
    name: str = "scenario"
    # False: apply the certificate's support point and keep counting
    stop_on_infeasible: bool = True

    def __post_init__(self):
        if not (self.dt > 0.0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.t_end >= self.dt:
            raise ValueError(f"t_end={self.t_end} must be at least dt={self.dt}")
        if self.record_every < 1:
            raise ValueError(f"record_every must be >= 1, got {self.record_every}")
        if self.x0 is not None:
            object.__setattr__(self, "x0", as_vector(self.x0, "x0"))


# ---------------------------------------------------------------------------
# trajectory log
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class TrajectoryLog:
    name: str
    n: int
    m: int
    nonnegative_states: Tuple[int, ...] = ()
    t: List[float] = field(default_factory=list)
    x: List[np.ndarray] = field(default_factory=list)
    u: List[np.ndarray] = field(default_factory=list)
    h: List[float] = field(default_factory=list)
    h_plus_zeta: List[float] = field(default_factory=list)
    c: List[float] = field(default_factory=list)
    d: List[np.ndarray] = field(default_factory=list)
    eps: List[float] = field(default_factory=list)
    qp_status: List[str] = field(default_factory=list)
    mu: List[float] = field(default_factory=list)
    slack: List[float] = field(default_factory=list)
    # counted at every step, recorded or not
    eps_clamped: int = 0
    qp_infeasible: int = 0
    input_violations: int = 0

    def __len__(self) -> int:
        return len(self.t)

    def header(self) -> List[str]:
        return (["t"] + [f"x{i + 1}" for i in range(self.n)] + [f"u{j + 1}" for j in range(self.m)]
                + ["h", "h_plus_zeta", "c", "eps", "qp_status", "mu", "slack"])

    def rows(self):
        for k in range(len(self)):
            yield ([self.t[k], *self.x[k].tolist(), *self.u[k].tolist(),
                    self.h[k], self.h_plus_zeta[k], self.c[k], self.eps[k],
                    self.qp_status[k], self.mu[k], self.slack[k]])

    def states(self) -> np.ndarray:
        return np.array(self.x).reshape(len(self), self.n)

    def inputs(self) -> np.ndarray:
        return np.array(self.u).reshape(len(self), self.m)

    def summary(self) -> Dict[str, Any]:
        """Summary statistics, recomputed from the records."""
        if not self.t:
            return {"records": 0}
        X = self.states()
        U = self.inputs()
        negative = {
            f"x{i + 1}": {"count": int(np.sum(X[:, i] < 0.0)), "min": float(np.min(X[:, i]))}
            for i in self.nonnegative_states
        }
        return {
            "records": len(self),
            "t_final": self.t[-1],
            "x_final": X[-1].tolist(),
            "min_h": float(np.min(self.h)),
            "min_h_plus_zeta": float(np.min(self.h_plus_zeta)),
            "max_abs_u": np.max(np.abs(U), axis=0).tolist(),
            "input_violations": self.input_violations,
            "qp_infeasible": self.qp_infeasible,
            "eps_clamped": self.eps_clamped,
            "negative_state_excursions": negative,
        }


# ---------------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------------

def _controller_params(controller: ControllerVariant) -> Optional[TuningParams]:
    if isinstance(controller, NominalOnly):
        return None
    return controller.params


class _ClosedLoop:
    """Evaluates one controller variant on one case study."""

    def __init__(self, case: CaseStudy, controller: ControllerVariant):
        self.case = case
        self.controller = controller
        self.params = _controller_params(controller)

    def evaluate(self, x: np.ndarray) -> Dict[str, Any]:
        case = self.case
        c, d = lie_terms(case.plant, case.barrier, x)
        h_val = case.barrier.value(x)
        q = np.asarray(case.nominal(x), dtype=float).reshape(case.plant.m)
        out = {"c": c, "d": d, "h": h_val, "eps": math.nan, "clamped": False,
               "zeta": 0.0, "qp_status": NO_QP, "mu": math.nan, "slack": math.nan,
               "qp": None}
        if self.params is None:
            out["u"] = q
            return out

        eps, clamped = epsilon_with_flag(self.params, h_val)
        rhs = halfspace_rhs(c, d, eps)
        out.update(eps=eps, clamped=clamped,
                   zeta=margin_from_eps(case.barrier.alpha, eps, case.disturbance.delta))

        if isinstance(self.controller, (LpQpFilter, TrialParams)):
            result = solve_safety_qp(QpInstance(q, d, rhs, case.input_set))
            out.update(u=result.u_star, qp_status=result.status.value, mu=result.mu,
                       slack=result.tissf_slack, qp=result)
            return out

        u = q + d / eps
        if isinstance(self.controller, BaselineSaturated):
            u = case.input_set.project(u)
        out.update(u=u, slack=float(d @ u) - rhs)
        return out

    def vector_field(self, t: float, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        plant = self.case.plant
        w = self.case.disturbance(t)
        xdot = plant.drift(x) + plant.input_matrix(x) @ (u + w)
        if plant.exogenous is not None:
            xdot = xdot + np.asarray(plant.exogenous(t), dtype=float)
        return xdot

    def rk4_step(self, t: float, x: np.ndarray, u: np.ndarray, dt: float) -> np.ndarray:
        k1 = self.vector_field(t, x, u)
        k2 = self.vector_field(t + 0.5 * dt, x + 0.5 * dt * k1, u)
        k3 = self.vector_field(t + 0.5 * dt, x + 0.5 * dt * k2, u)
        k4 = self.vector_field(t + dt, x + dt * k3, u)
        return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def run_scenario(config: ScenarioConfig, case: Optional[CaseStudy] = None) -> TrajectoryLog:
    """
    Simulate one scenario.

    Args:
        config: scenario description
        case: explicit case study; looked up by ``config.plant`` when omitted

    Raises:
        ScenarioFailure: the safety QP returned an infeasibility certificate
            (only with ``stop_on_infeasible``).
        NonFiniteStateError: the state became NaN or infinite.
    """
    if case is None:
        case = get_case(config.plant, config.alpha.a)
    loop = _ClosedLoop(case, config.controller)
    plant = case.plant
    x = np.array(case.x0 if config.x0 is None else config.x0, dtype=float)
    if x.size != plant.n:
        raise ValueError(f"x0 has length {x.size}, plant '{plant.label}' has n={plant.n}")

    log = TrajectoryLog(config.name, plant.n, plant.m, tuple(plant.nonnegative_states))
    # floor: the last step never passes t_end
    n_steps = int(np.floor(config.t_end / config.dt + 1e-9))
    logger.info("[SIM] %s: plant=%s controller=%s steps=%d dt=%g",
                config.name, plant.label, config.controller.kind, n_steps, config.dt)

    for k in range(n_steps + 1):
        t = k * config.dt
        out = loop.evaluate(x)
        u = np.asarray(out["u"], dtype=float).reshape(plant.m)
        infeasible = out["qp_status"] == QpStatus.INFEASIBLE_CERTIFICATE.value
        if out["clamped"]:
            log.eps_clamped += 1

        if infeasible:
            log.qp_infeasible += 1
        if not case.input_set.contains(u, INPUT_TOL):
            log.input_violations += 1
        if k % config.record_every == 0:
            log.t.append(t)
            log.x.append(x.copy())
            log.u.append(u.copy())
            log.h.append(out["h"])
            log.h_plus_zeta.append(out["h"] + out["zeta"])
            log.c.append(out["c"])
            log.d.append(np.asarray(out["d"], dtype=float))
            log.eps.append(out["eps"])
            log.qp_status.append(out["qp_status"])
            log.mu.append(out["mu"])
            log.slack.append(out["slack"])

        if infeasible:
            result: QpResult = out["qp"]
            logger.warning("[QP] infeasible certificate at t=%.4f x=%s (rhs exceeds sigma=%.6g)",
                           t, np.round(x, 6).tolist(), result.achievable)
            if config.stop_on_infeasible:
                raise ScenarioFailure(
                    f"Safety QP infeasible at t={t:.6g}", t=t, x=x.copy(),
                    certificate=result, log=log,
                )

        if k == n_steps:
            break
        x = loop.rk4_step(t, x, u, config.dt)
        if plant.sync is not None:
            x = np.asarray(plant.sync(t + config.dt, x), dtype=float)
        if not np.all(np.isfinite(x)):
            raise NonFiniteStateError(f"State became non-finite at t={t + config.dt:.6g}",
                                      t=t + config.dt, log=log)

    summary = log.summary()
    logger.info("[SIM] %s done: min h=%.4g min h+zeta=%.4g max|u|=%s infeasible=%d",
                config.name, summary["min_h"], summary["min_h_plus_zeta"],
                summary["max_abs_u"], summary["qp_infeasible"])
    return log


def convergence_probe(config: ScenarioConfig, dt_list: Sequence[float],
                      case: Optional[CaseStudy] = None) -> List[Dict[str, Any]]:
    """
    Terminal-state differences against the finest step size.

    Returns:
        one row per dt (in the given order): dt, terminal state and the
        Euclidean distance to the finest run's terminal state
    """
    if len(dt_list) < 2:
        raise ValueError("convergence_probe needs at least two step sizes")
    terminal = {}
    for dt in dt_list:
        log = run_scenario(replace(config, dt=float(dt), record_every=1), case)
        terminal[dt] = log.x[-1]
    reference = terminal[min(dt_list)]
    return [
        {"dt": float(dt), "terminal_state": terminal[dt].tolist(),
         "delta": float(np.linalg.norm(terminal[dt] - reference))}
        for dt in dt_list
    ]


@dataclass(eq=False)
class TrialSearchResult:
    chosen: Optional[TrialParams]
    log: Optional[TrajectoryLog]
    attempts: List[Dict[str, Any]]


def trial_search(config: ScenarioConfig, candidates: Sequence[Tuple[float, float]],
                 case: Optional[CaseStudy] = None) -> TrialSearchResult:
    """
    Try (eps0, lambda) pairs in order through the QP filter and keep the
    first whose run stays in h + zeta > 0 with every input inside U and no
    infeasible QP along the way.
    """
    attempts: List[Dict[str, Any]] = []
    for eps0, lam in candidates:
        controller = TrialParams(float(eps0), float(lam))
        try:
            log = run_scenario(replace(config, controller=controller), case)
        except ScenarioFailure as exc:
            attempts.append({"eps0": eps0, "lambda": lam, "accepted": False,
                             "reason": f"qp infeasible at t={exc.t:.4g}"})
            continue
        summary = log.summary()
        accepted = (summary["min_h_plus_zeta"] > 0.0 and summary["input_violations"] == 0
                    and summary["qp_infeasible"] == 0)
        attempts.append({"eps0": eps0, "lambda": lam, "accepted": accepted,
                         "min_h_plus_zeta": summary["min_h_plus_zeta"],
                         "input_violations": summary["input_violations"],
                         "qp_infeasible": summary["qp_infeasible"]})
        logger.info("[SIM] trial eps0=%g lambda=%g -> %s", eps0, lam,
                    "accepted" if accepted else "rejected")
        if accepted:
            return TrialSearchResult(controller, log, attempts)
    return TrialSearchResult(None, None, attempts)
