"""
Shared fixtures: small input sets, the registered case studies and a
scalar decay plant whose exact solution is known.
"""

import math

import numpy as np
import pytest

from tissf.convex_sets import BallSet, BoxSet, PolyhedronSet
from tissf.core import BarrierSpec, Disturbance, PlantSpec
from tissf.plants import CaseStudy
from tissf.registry import get_case
from tissf.tuning import DomainBox


@pytest.fixture
def unit_box():
    return BoxSet([-1.0, -1.0], [1.0, 1.0])


@pytest.fixture
def unit_ball():
    return BallSet(1.0)


@pytest.fixture
def unit_square():
    A = [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]
    return PolyhedronSet(A, [1.0, 1.0, 1.0, 1.0])


@pytest.fixture
def example1():
    return get_case("example1")


@pytest.fixture
def ccc():
    return get_case("ccc")


def _scalar_case(f, exogenous=None) -> CaseStudy:
    plant = PlantSpec(
        n=1,
        m=1,
        f=f,
        g=lambda x: np.zeros((1, 1)),
        label="scalar",
        exogenous=exogenous,
    )
    barrier = BarrierSpec(h=lambda x: 1.0, grad_h=lambda x: np.zeros(1), label="one")
    return CaseStudy(
        plant=plant,
        barrier=barrier,
        nominal=lambda x: np.zeros(1),
        disturbance=Disturbance(0.0, lambda t: np.zeros(1)),
        input_set=BallSet(1.0),
        domain=DomainBox([-1.0], [1.0]),
        x0=np.array([1.0]),
    )


@pytest.fixture
def decay_case():
    """x' = -x from x(0) = 1, so x(t) = exp(-t)."""
    return _scalar_case(lambda x: -x)


@pytest.fixture
def growth_case():
    """No drift; an exogenous term turns infinite after t = 0.52."""
    return _scalar_case(lambda x: np.zeros(1),
                        exogenous=lambda t: np.array([np.inf if t > 0.52 else 0.0]))


@pytest.fixture
def exact_decay():
    return lambda t: math.exp(-t)
