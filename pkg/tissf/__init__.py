"""
TISSf-CBF tuning toolkit: input sets, LP/QP solvers, the exponential
tuning synthesis and a fixed-step closed-loop simulator.
Exports main classes for external use.
"""

from .convex_sets import BallSet, BoxSet, InputSet, PolyhedronSet, input_set_from_dict
from .core import (
    BarrierSpec,
    DegeneracyFloors,
    Disturbance,
    LinearClassK,
    PlantSpec,
    TuningParams,
    compatibility_bound,
    epsilon,
    eta,
    robustness_margin,
    tissf_halfspace,
)
from .engine import (
    BaselineFixedForm,
    BaselineSaturated,
    LpQpFilter,
    NominalOnly,
    ScenarioConfig,
    TrajectoryLog,
    TrialParams,
    convergence_probe,
    run_scenario,
    trial_search,
)
from .lp_solver import LpProblem, LpSolution, LpStatus, solve_2d, solve_simplex
from .qp_filter import QpInstance, QpResult, QpStatus, brute_force_qp, solve_safety_qp
from .registry import get_case
from .tuning import (
    DomainBox,
    SamplingMethod,
    SynthesisConfig,
    TuningLpResult,
    sample_covering,
    synthesize,
    verify_compatibility,
)

__all__ = [
    'BallSet', 'BoxSet', 'InputSet', 'PolyhedronSet', 'input_set_from_dict',
    'BarrierSpec', 'DegeneracyFloors', 'Disturbance', 'LinearClassK', 'PlantSpec',
    'TuningParams', 'compatibility_bound', 'epsilon', 'eta', 'robustness_margin',
    'tissf_halfspace',
    'BaselineFixedForm', 'BaselineSaturated', 'LpQpFilter', 'NominalOnly',
    'ScenarioConfig', 'TrajectoryLog', 'TrialParams', 'convergence_probe',
    'run_scenario', 'trial_search',
    'LpProblem', 'LpSolution', 'LpStatus', 'solve_2d', 'solve_simplex',
    'QpInstance', 'QpResult', 'QpStatus', 'brute_force_qp', 'solve_safety_qp',
    'get_case',
    'DomainBox', 'SamplingMethod', 'SynthesisConfig', 'TuningLpResult',
    'sample_covering', 'synthesize', 'verify_compatibility',
]
