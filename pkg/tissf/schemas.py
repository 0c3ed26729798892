"""
pydantic models for the JSON configs read by the command line.

Every top-level config carries ``schema_version``; unknown keys are
rejected so typos fail loudly instead of being ignored.
"""

from typing import Annotated, List, Literal, Optional, Tuple, Union

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    NonNegativeFloat,
    PositiveFloat,
    PositiveInt,
    field_validator,
    model_validator,
)

from .convex_sets import InputSet, input_set_from_dict

SCHEMA_VERSION = 1


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class _Versioned(_Strict):
    schema_version: Literal[1] = SCHEMA_VERSION


# ---------------------------------------------------------------------------
# shared pieces
# ---------------------------------------------------------------------------

class BallModel(_Strict):
    type: Literal["ball"]
    gamma: PositiveFloat


class BoxModel(_Strict):
    type: Literal["box"]
    lo: List[float] = Field(min_length=1)
    hi: List[float] = Field(min_length=1)

    @model_validator(mode="after")
    def _bounds_ordered(self):
        if len(self.lo) != len(self.hi):
            raise ValueError("box lo and hi must have the same length")
        if any(l > h for l, h in zip(self.lo, self.hi)):
            raise ValueError("box needs lo <= hi componentwise")
        return self


class PolyhedronModel(_Strict):
    type: Literal["polyhedron"]
    A: List[List[float]] = Field(min_length=1)
    b: List[float] = Field(min_length=1)

    @model_validator(mode="after")
    def _shapes_agree(self):
        if len(self.A) != len(self.b):
            raise ValueError("polyhedron A and b must have the same number of rows")
        if len({len(row) for row in self.A}) != 1:
            raise ValueError("polyhedron rows of A must have equal length")
        return self


InputSetModel = Annotated[Union[BallModel, BoxModel, PolyhedronModel], Field(discriminator="type")]


def build_input_set(model: Union[BallModel, BoxModel, PolyhedronModel]) -> InputSet:
    return input_set_from_dict(model.model_dump())


class DomainModel(_Strict):
    lo: List[float] = Field(min_length=1)
    hi: List[float] = Field(min_length=1)

    @model_validator(mode="after")
    def _bounds_ordered(self):
        if len(self.lo) != len(self.hi):
            raise ValueError("domain lo and hi must have the same length")
        if any(l >= h for l, h in zip(self.lo, self.hi)):
            raise ValueError("domain needs lo < hi componentwise")
        return self


class FloorsModel(_Strict):
    d_min: PositiveFloat = 1e-6
    s_min: PositiveFloat = 1e-6


class LipschitzModel(_Strict):
    L_h: NonNegativeFloat
    L_eta: NonNegativeFloat


class SamplingModel(_Strict):
    """Sampling of the domain; ``size`` is per-axis counts (grid) or N (Latin hypercube)."""
    method: Literal["grid", "latin_hypercube"] = "grid"
    size: Union[PositiveInt, List[PositiveInt]] = 41
    kappa: Optional[PositiveFloat] = None

    @model_validator(mode="after")
    def _method_fields(self):
        if self.method == "latin_hypercube":
            if self.kappa is None:
                raise ValueError("latin_hypercube sampling needs kappa")
            if not isinstance(self.size, int):
                raise ValueError("latin_hypercube size must be a single integer N")
        return self


class ParamsModel(_Strict):
    """Tuning parameters given as ln_eps0 or eps0, plus lambda."""
    ln_eps0: Optional[float] = None
    eps0: Optional[PositiveFloat] = None
    lam: PositiveFloat = Field(alias="lambda")
    lambda_min: PositiveFloat = 1e-2

    @model_validator(mode="after")
    def _one_of_eps(self):
        if (self.ln_eps0 is None) == (self.eps0 is None):
            raise ValueError("give exactly one of ln_eps0 and eps0")
        return self


# ---------------------------------------------------------------------------
# tune
# ---------------------------------------------------------------------------

class TuneConfig(_Versioned):
    plant: str
    alpha_gain: PositiveFloat = 1.0
    domain: Optional[DomainModel] = None
    input_set: Optional[InputSetModel] = None
    sampling: SamplingModel = Field(default_factory=SamplingModel)
    rho: NonNegativeFloat = 1.0
    lambda_min: PositiveFloat = 1e-2
    floors: FloorsModel = Field(default_factory=FloorsModel)
    fd_step: PositiveFloat = 1e-6
    seed: int = 0
    lipschitz: Optional[LipschitzModel] = None


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

class LpQpFilterModel(_Strict):
    kind: Literal["lp_qp_filter"]
    tuning_result: Optional[str] = None
    params: Optional[ParamsModel] = None

    @model_validator(mode="after")
    def _source(self):
        if (self.tuning_result is None) == (self.params is None):
            raise ValueError("lp_qp_filter needs exactly one of tuning_result and params")
        return self


class FixedParamsModel(_Strict):
    kind: Literal["trial_params", "baseline_fixed_form", "baseline_saturated"]
    eps0: PositiveFloat
    lam: PositiveFloat = Field(alias="lambda")


class NominalOnlyModel(_Strict):
    kind: Literal["nominal_only"]


class TrialSearchModel(_Strict):
    kind: Literal["trial_search"]
    candidates: List[Tuple[PositiveFloat, PositiveFloat]] = Field(min_length=1)


ControllerModel = Annotated[
    Union[LpQpFilterModel, FixedParamsModel, NominalOnlyModel, TrialSearchModel],
    Field(discriminator="kind"),
]


class ScenarioModel(_Strict):
    name: str = Field(pattern=r"^[A-Za-z0-9_.\-]+$")
    plant: str
    controller: ControllerModel
    x0: Optional[List[float]] = None
    t_end: PositiveFloat = 20.0
    dt: PositiveFloat = 1e-3
    alpha_gain: PositiveFloat = 1.0
    record_every: PositiveInt = 1
    stop_on_infeasible: bool = True

    @model_validator(mode="after")
    def _horizon(self):
        if self.t_end < self.dt:
            raise ValueError(f"t_end={self.t_end} must be at least dt={self.dt}")
        return self


class SimulateConfig(_Versioned):
    scenarios: List[ScenarioModel] = Field(min_length=1)
    # closed-loop runs are deterministic; the seed is recorded with each summary
    seed: int = 0

    @field_validator("scenarios")
    @classmethod
    def _unique_names(cls, scenarios: List[ScenarioModel]) -> List[ScenarioModel]:
        names = [s.name for s in scenarios]
        if len(set(names)) != len(names):
            raise ValueError(f"scenario names must be unique: {names}")
        return scenarios


# ---------------------------------------------------------------------------
# verify / support / report
# ---------------------------------------------------------------------------

class VerifyConfig(_Versioned):
    plant: str
    alpha_gain: PositiveFloat = 1.0
    domain: Optional[DomainModel] = None
    input_set: Optional[InputSetModel] = None
    tuning_result: Optional[str] = None
    params: Optional[ParamsModel] = None
    sampling: SamplingModel = Field(default_factory=SamplingModel)
    floors: FloorsModel = Field(default_factory=FloorsModel)
    seed: int = 0

    @model_validator(mode="after")
    def _source(self):
        if (self.tuning_result is None) == (self.params is None):
            raise ValueError("verify needs exactly one of tuning_result and params")
        return self


class SupportConfig(_Versioned):
    input_set: InputSetModel
    directions: List[List[float]] = Field(min_length=1)


class ReportConfig(_Versioned):
    directory: str = "."
    max_rows: PositiveInt = 20


CONFIG_MODELS = {
    "tune": TuneConfig,
    "simulate": SimulateConfig,
    "verify": VerifyConfig,
    "support": SupportConfig,
    "report": ReportConfig,
}
