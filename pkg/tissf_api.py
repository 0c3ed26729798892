"""
API wrapper between the command line and the tissf core.

One function per command. Each takes a validated config model, writes its
artifacts under ``out_dir`` and reports progress as event dictionaries
(``timestamp``, ``type``, ``message`` plus payload) through an optional
callback.
"""

import json
import logging
import time
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple, Type, TypeVar

from pydantic import BaseModel, ValidationError

from tissf.convex_sets import InputSet
from tissf.core import DegeneracyFloors, LinearClassK, TuningParams
from tissf.engine import (
    BaselineFixedForm,
    BaselineSaturated,
    LpQpFilter,
    NominalOnly,
    ScenarioConfig,
    TrajectoryLog,
    TrialParams,
    run_scenario,
    trial_search,
)
from tissf.errors import (
    ConfigError,
    InfeasibleTuningError,
    InvalidSetError,
    NonFiniteStateError,
    ScenarioFailure,
    TissfError,
    UnboundedTuningError,
)
from tissf.plants import CaseStudy
from tissf.registry import get_case
from tissf.schemas import (
    CONFIG_MODELS,
    SCHEMA_VERSION,
    FixedParamsModel,
    LpQpFilterModel,
    NominalOnlyModel,
    ParamsModel,
    ScenarioModel,
    SimulateConfig,
    SupportConfig,
    TrialSearchModel,
    TuneConfig,
    VerifyConfig,
    build_input_set,
)
from tissf.tuning import (
    DomainBox,
    LipschitzEstimates,
    SamplingMethod,
    SynthesisConfig,
    TuningLpResult,
    VerificationReport,
    sample_covering,
    synthesize,
    verify_compatibility,
)
from ui.report import render_directory
from utils.io_utils import metadata, read_json, write_csv, write_json

logger = logging.getLogger(__name__)

EventCallback = Callable[[Dict[str, Any]], None]
ModelT = TypeVar("ModelT", bound=BaseModel)

TUNING_RESULT_FILE = "tuning_result.json"
VERIFY_FILE = "verify.json"
TRAJECTORY_FILE = "trajectory.csv"
SUMMARY_FILE = "summary.json"


def _emit(callback: Optional[EventCallback], event_type: str, message: str, **payload: Any) -> None:
    if callback is None:
        return
    callback({"timestamp": time.time(), "type": event_type, "message": message, **payload})


def load_config(path: Path, model: Type[ModelT]) -> ModelT:
    """
    Read and validate a JSON config.

    Raises:
        ConfigError: unreadable file, invalid JSON or schema violation.
    """
    try:
        payload = read_json(path)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"Cannot read config {path}: {exc}") from exc
    try:
        return model.model_validate(payload)
    except ValidationError as exc:
        raise ConfigError(f"Invalid {model.__name__} in {path}:\n{exc}") from exc


def _resolve(path: str, base_dir: Optional[Path]) -> Path:
    candidate = Path(path)
    if candidate.is_absolute() or base_dir is None:
        return candidate
    return Path(base_dir) / candidate


def _case_setup(plant: str, alpha_gain: float, domain_model, set_model) -> Tuple[CaseStudy, DomainBox, InputSet]:
    case = get_case(plant, alpha_gain)
    try:
        domain = DomainBox(domain_model.lo, domain_model.hi) if domain_model else case.domain
        input_set = build_input_set(set_model) if set_model else case.input_set
    except (ValueError, InvalidSetError) as exc:
        raise ConfigError(str(exc)) from exc
    if domain.n != case.plant.n:
        raise ConfigError(f"Domain has {domain.n} axes, plant '{plant}' has n={case.plant.n}")
    if input_set.dim is not None and input_set.dim != case.plant.m:
        raise ConfigError(f"Input set has dimension {input_set.dim}, plant '{plant}' has m={case.plant.m}")
    return case, domain, input_set


def _params_from_model(model: ParamsModel) -> TuningParams:
    try:
        if model.ln_eps0 is not None:
            return TuningParams(model.ln_eps0, model.lam, min(model.lambda_min, model.lam))
        return TuningParams.from_eps0(model.eps0, model.lam, model.lambda_min)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_tuning_params(path: Path) -> TuningParams:
    """Parameters from a ``tuning_result.json`` written by :func:`run_tune`."""
    try:
        params = read_json(path)["params"]
        return TuningParams(float(params["ln_eps0"]), float(params["lambda"]),
                            float(params["lambda_min"]))
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"Cannot load tuning parameters from {path}: {exc}") from exc


def _select_params(params: Optional[ParamsModel], tuning_result: Optional[str],
                   base_dir: Optional[Path]) -> TuningParams:
    if params is not None:
        return _params_from_model(params)
    return load_tuning_params(_resolve(tuning_result, base_dir))


# ---------------------------------------------------------------------------
# tune
# ---------------------------------------------------------------------------

def run_tune(config: TuneConfig, out_dir: Path, callback: Optional[EventCallback] = None,
             seed: Optional[int] = None) -> TuningLpResult:
    """
    Synthesize tuning parameters and write ``tuning_result.json``.

    Raises:
        ConfigError, EmptySampleSetError, AllDegenerateError,
        InfeasibleTuningError, UnboundedTuningError
    """
    seed = config.seed if seed is None else seed
    case, domain, input_set = _case_setup(config.plant, config.alpha_gain, config.domain,
                                          config.input_set)
    sampling = config.sampling
    try:
        synthesis = SynthesisConfig(
            method=SamplingMethod(sampling.method),
            size=sampling.size if isinstance(sampling.size, int) else tuple(sampling.size),
            kappa=sampling.kappa,
            lambda_min=config.lambda_min,
            rho=config.rho,
            floors=DegeneracyFloors(config.floors.d_min, config.floors.s_min),
            fd_step=config.fd_step,
            rng_seed=seed,
            estimates=(LipschitzEstimates(config.lipschitz.L_h, config.lipschitz.L_eta)
                       if config.lipschitz else None),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    _emit(callback, "tune_start", f"Tuning '{config.plant}' with {sampling.method} sampling",
          plant=config.plant)
    header = {
        "metadata": metadata("tune", schema_version=SCHEMA_VERSION, seed=seed),
        "plant": config.plant,
        "alpha_gain": config.alpha_gain,
        "domain": domain.to_dict(),
        "input_set": input_set.to_dict(),
        "rho": config.rho,
    }
    out_path = Path(out_dir) / TUNING_RESULT_FILE
    try:
        result = synthesize(domain, case.plant, case.barrier, input_set, synthesis)
    except (InfeasibleTuningError, UnboundedTuningError) as exc:
        body = exc.result.to_dict() if exc.result is not None else {}
        write_json(out_path, {**header, **body, "error": str(exc)})
        _emit(callback, "warning", str(exc))
        raise

    for warning in result.warnings:
        _emit(callback, "warning", warning)
    write_json(out_path, {**header, **result.to_dict()})
    _emit(callback, "tune_done",
          f"eps0={result.params.eps0:.4g} lambda={result.params.lam:.4g} "
          f"min_margin={result.min_margin:.4g}",
          params=result.params.to_dict(), path=str(out_path))
    return result


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def _controller_from(model, base_dir: Optional[Path]):
    if isinstance(model, LpQpFilterModel):
        return LpQpFilter(_select_params(model.params, model.tuning_result, base_dir))
    if isinstance(model, NominalOnlyModel):
        return NominalOnly()
    if isinstance(model, FixedParamsModel):
        variants = {
            "trial_params": TrialParams,
            "baseline_fixed_form": BaselineFixedForm,
            "baseline_saturated": BaselineSaturated,
        }
        return variants[model.kind](model.eps0, model.lam)
    raise ConfigError(f"Unsupported controller kind: {model.kind}")


def _scenario_config(model: ScenarioModel, controller) -> ScenarioConfig:
    try:
        return ScenarioConfig(
            plant=model.plant,
            controller=controller,
            x0=model.x0,
            t_end=model.t_end,
            dt=model.dt,
            alpha=LinearClassK(model.alpha_gain),
            record_every=model.record_every,
            name=model.name,
            stop_on_infeasible=model.stop_on_infeasible,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _write_run(out_dir: Path, scenario: ScenarioModel, log: Optional[TrajectoryLog],
               status: str, controller: Dict[str, Any], seed: int, **extra: Any) -> Dict[str, Any]:
    run_dir = Path(out_dir) / scenario.name
    summary = log.summary() if log is not None else {"records": 0}
    if log is not None:
        write_csv(run_dir / TRAJECTORY_FILE, log.header(), log.rows())
    write_json(run_dir / SUMMARY_FILE, {
        "metadata": metadata("simulate", schema_version=SCHEMA_VERSION, seed=seed),
        "scenario": scenario.name,
        "plant": scenario.plant,
        "status": status,
        "controller": controller,
        "t_end": scenario.t_end,
        "dt": scenario.dt,
        "summary": summary,
        **extra,
    })
    return summary


def run_simulate(config: SimulateConfig, out_dir: Path, callback: Optional[EventCallback] = None,
                 base_dir: Optional[Path] = None,
                 seed: Optional[int] = None) -> Dict[str, Dict[str, Any]]:
    """
    Run every scenario of a batch and write ``<name>/trajectory.csv`` and
    ``<name>/summary.json`` for each.

    All scenarios run even if one fails; afterwards the first
    ScenarioFailure or NonFiniteStateError is re-raised.
    """
    summaries: Dict[str, Dict[str, Any]] = {}
    seed = config.seed if seed is None else seed
    failures: List[TissfError] = []
    for scenario in config.scenarios:
        _emit(callback, "scenario_start", f"{scenario.name}: {scenario.controller.kind} on {scenario.plant}",
              scenario=scenario.name)

        if isinstance(scenario.controller, TrialSearchModel):
            base = _scenario_config(scenario, NominalOnly())
            outcome = trial_search(base, scenario.controller.candidates)
            chosen = outcome.chosen
            controller = ({"kind": "trial_search", "eps0": chosen.eps0, "lambda": chosen.lam}
                          if chosen else {"kind": "trial_search"})
            status = "ok" if chosen else "no_candidate_accepted"
            summaries[scenario.name] = _write_run(out_dir, scenario, outcome.log, status,
                                                  controller, seed, attempts=outcome.attempts)
            _emit(callback, "scenario_done", f"{scenario.name}: trial search {status}",
                  scenario=scenario.name)
            continue

        variant = _controller_from(scenario.controller, base_dir)
        controller = {"kind": variant.kind}
        if not isinstance(variant, NominalOnly):
            controller.update(variant.params.to_dict())
        try:
            log = run_scenario(_scenario_config(scenario, variant))
            status = "ok"
        except (ScenarioFailure, NonFiniteStateError) as exc:
            log = exc.log
            status = "failed"
            failures.append(exc)
            _emit(callback, "scenario_failed", f"{scenario.name}: {exc}", scenario=scenario.name)
        summary = _write_run(out_dir, scenario, log, status, controller, seed)
        summaries[scenario.name] = summary
        if status == "ok":
            _emit(callback, "scenario_done",
                  f"{scenario.name}: min h+zeta={summary['min_h_plus_zeta']:.4g} "
                  f"max|u|={summary['max_abs_u']}", scenario=scenario.name, summary=summary)

    if failures:
        raise failures[0]
    return summaries


# ---------------------------------------------------------------------------
# verify / support / report / schema
# ---------------------------------------------------------------------------

def run_verify(config: VerifyConfig, out_dir: Path, callback: Optional[EventCallback] = None,
               base_dir: Optional[Path] = None, seed: Optional[int] = None) -> VerificationReport:
    """Check ln eps0 + lambda h >= eta on a fresh sample and write ``verify.json``."""
    seed = config.seed if seed is None else seed
    case, domain, input_set = _case_setup(config.plant, config.alpha_gain, config.domain,
                                          config.input_set)
    params = _select_params(config.params, config.tuning_result, base_dir)
    sampling = config.sampling
    samples = sample_covering(domain, case.barrier, SamplingMethod(sampling.method),
                              sampling.size, seed, kappa=sampling.kappa)
    floors = DegeneracyFloors(config.floors.d_min, config.floors.s_min)
    report = verify_compatibility(params, case.plant, case.barrier, input_set, samples, floors)

    out_path = Path(out_dir) / VERIFY_FILE
    write_json(out_path, {
        "metadata": metadata("verify", schema_version=SCHEMA_VERSION, seed=seed),
        "plant": config.plant,
        "params": params.to_dict(),
        "domain": domain.to_dict(),
        "input_set": input_set.to_dict(),
        "kappa_nominal": samples.kappa_nominal,
        "kappa_effective": samples.kappa_effective,
        **report.to_dict(),
    })
    _emit(callback, "verify_done",
          f"{report.n_checked} samples, min margin {report.min_margin:.4g}, "
          f"{len(report.violations)} violations", path=str(out_path))
    return report


def run_support(config: SupportConfig, callback: Optional[EventCallback] = None) -> List[Dict[str, Any]]:
    """sigma_U(d) and a support point for every configured direction."""
    try:
        input_set = build_input_set(config.input_set)
    except (InvalidSetError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    rows = []
    for direction in config.directions:
        if input_set.dim is not None and len(direction) != input_set.dim:
            raise ConfigError(f"Direction {direction} does not match set dimension {input_set.dim}")
        row = {"direction": direction,
               "sigma": input_set.support_value(direction),
               "u_star": input_set.support_point(direction).tolist()}
        rows.append(row)
        _emit(callback, "support_row", f"d={direction} sigma={row['sigma']:.6g}", row=row)
    return rows


def run_report(directory: Path, max_rows: int = 20) -> str:
    return render_directory(Path(directory), max_rows)


def write_schemas(out_dir: Path) -> List[Path]:
    """Write the JSON Schema of every config model as ``<command>.schema.json``."""
    return [write_json(Path(out_dir) / f"{name}.schema.json", model.model_json_schema(by_alias=True))
            for name, model in CONFIG_MODELS.items()]
