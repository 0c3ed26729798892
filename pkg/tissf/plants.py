"""
Case-study plants: a scalar-input double integrator example and
connected cruise control (CCC) behind a braking lead vehicle.
"""

import math
from typing import Callable, NamedTuple, Optional, Tuple

import numpy as np

from .convex_sets import BoxSet, InputSet
from .core import BarrierSpec, Disturbance, LinearClassK, PlantSpec
from .tuning import DomainBox

NominalController = Callable[[np.ndarray], np.ndarray]
LeadProfile = Callable[[float], Tuple[float, float]]


class CaseStudy(NamedTuple):
    plant: PlantSpec
    barrier: BarrierSpec
    nominal: NominalController
    disturbance: Disturbance
    input_set: InputSet
    domain: DomainBox
    x0: np.ndarray
    lead_profile: Optional[LeadProfile] = None


# ---------------------------------------------------------------------------
# example 1: x1' = -x2, x2' = u + w(t), h = x1 - x2
# ---------------------------------------------------------------------------

EXAMPLE1_MU = 3.0
EXAMPLE1_U_MAX = 15.0
EXAMPLE1_DOMAIN = ((-5.0, -5.0), (5.0, 5.0))
EXAMPLE1_X0 = (5.0, 0.0)


def build_example1(alpha: LinearClassK = LinearClassK()) -> CaseStudy:
    plant = PlantSpec(
        n=2,
        m=1,
        f=lambda x: np.array([-x[1], 0.0]),
        g=lambda x: np.array([[0.0], [1.0]]),
        label="example1",
    )
    barrier = BarrierSpec(
        h=lambda x: float(x[0] - x[1]),
        grad_h=lambda x: np.array([1.0, -1.0]),
        alpha=alpha,
        label="x1 - x2",
    )
    disturbance = Disturbance(EXAMPLE1_MU, lambda t: np.array([EXAMPLE1_MU * math.sin(t)]))
    return CaseStudy(
        plant=plant,
        barrier=barrier,
        nominal=lambda x: np.array([x[0] - 2.0 * x[1] - 1.0]),
        disturbance=disturbance,
        input_set=BoxSet([-EXAMPLE1_U_MAX], [EXAMPLE1_U_MAX]),
        domain=DomainBox(*EXAMPLE1_DOMAIN),
        x0=np.array(EXAMPLE1_X0),
    )


# ---------------------------------------------------------------------------
# connected cruise control, state (D, v, v_L)
# ---------------------------------------------------------------------------

# safe distance h_hat(v, v_L) = D_SF + THETA v + ETA_C v_L + XI v^2 + ZETA_C v v_L + OMEGA_C v_L^2
D_SF = 2.0
THETA = 1.1
ETA_C = 0.6
XI = 0.03
ZETA_C = -0.03
OMEGA_C = -0.03

K1 = 0.85
K2 = 0.75
K_V = 0.7
D_ST = 7.0
V_BAR = 20.0

CCC_DELTA = 1.2
CCC_U_MIN = -6.0
CCC_U_MAX = 0.8
CCC_DOMAIN = ((0.0, 0.0, 0.0), (60.0, 20.0, 20.0))
CCC_X0 = (40.0, 15.0, 15.0)

LEAD_V0 = 15.0
LEAD_BRAKE_TIME = 5.0
LEAD_DECEL = 4.0


def safe_distance(v: float, v_lead: float) -> float:
    return (D_SF + THETA * v + ETA_C * v_lead + XI * v * v
            + ZETA_C * v * v_lead + OMEGA_C * v_lead * v_lead)


def range_policy(headway: float) -> float:
    """Desired velocity V_D(D) = min(max(0, K_v (D - D_st)), v_bar)."""
    return min(max(0.0, K_V * (headway - D_ST)), V_BAR)


def lead_velocity(t: float) -> Tuple[float, float]:
    """
    Lead vehicle (v_L, a_L): cruises at 15 m/s, brakes at 4 m/s^2 from t = 5 s
    and stays stopped once v_L reaches 0.
    """
    if t < LEAD_BRAKE_TIME:
        return LEAD_V0, 0.0
    v_lead = max(0.0, LEAD_V0 - LEAD_DECEL * (t - LEAD_BRAKE_TIME))
    return v_lead, (-LEAD_DECEL if v_lead > 0.0 else 0.0)


def _ccc_barrier_gradient(x: np.ndarray) -> np.ndarray:
    v, v_lead = x[1], x[2]
    return np.array([
        1.0,
        -(THETA + 2.0 * XI * v + ZETA_C * v_lead),
        -(ETA_C + ZETA_C * v + 2.0 * OMEGA_C * v_lead),
    ])


def _sync_lead(t: float, x: np.ndarray) -> np.ndarray:
    synced = np.array(x, dtype=float)
    synced[2] = lead_velocity(t)[0]
    return synced


def build_ccc(alpha: LinearClassK = LinearClassK()) -> CaseStudy:
    """
    The controller and the offline tuning see v_L' = 0; the lead braking
    enters only through the plant's exogenous channel during simulation.
    """
    plant = PlantSpec(
        n=3,
        m=1,
        f=lambda x: np.array([x[2] - x[1], 0.0, 0.0]),
        g=lambda x: np.array([[0.0], [1.0], [0.0]]),
        label="ccc",
        exogenous=lambda t: np.array([0.0, 0.0, lead_velocity(t)[1]]),
        sync=_sync_lead,
        nonnegative_states=(1,),
    )
    barrier = BarrierSpec(
        h=lambda x: float(x[0] - safe_distance(x[1], x[2])),
        grad_h=_ccc_barrier_gradient,
        alpha=alpha,
        label="D - h_hat(v, v_L)",
    )

    def nominal(x: np.ndarray) -> np.ndarray:
        headway, v, v_lead = x
        return np.array([K1 * (range_policy(headway) - v) + K2 * (v_lead - v)])

    return CaseStudy(
        plant=plant,
        barrier=barrier,
        nominal=nominal,
        disturbance=Disturbance(CCC_DELTA, lambda t: np.array([CCC_DELTA])),
        input_set=BoxSet([CCC_U_MIN], [CCC_U_MAX]),
        domain=DomainBox(*CCC_DOMAIN),
        x0=np.array(CCC_X0),
        lead_profile=lead_velocity,
    )
