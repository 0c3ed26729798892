import math

import numpy as np
import pytest

from tissf.convex_sets import BallSet, BoxSet
from tissf.core import (
    EPS_CAP,
    BarrierSpec,
    Degenerate,
    DegeneracyFloors,
    IncompatibleNominal,
    LinearClassK,
    TuningParams,
    check_gradient,
    compatibility_bound,
    epsilon,
    epsilon_with_flag,
    eta,
    lie_terms,
    robustness_margin,
    tissf_halfspace,
)
from tissf.errors import GradientMismatchError, NonFiniteError


def test_lie_terms_of_example1(example1):
    c, d = lie_terms(example1.plant, example1.barrier, [1.0, 2.0])
    # grad h . f = -x2, alpha(h) = x1 - x2
    assert c == pytest.approx(-3.0)
    np.testing.assert_array_equal(d, [-1.0])


def test_lie_terms_use_the_class_k_gain():
    from tissf.plants import build_example1

    case = build_example1(LinearClassK(2.0))
    c, _ = lie_terms(case.plant, case.barrier, [3.0, 1.0])
    assert c == pytest.approx(-1.0 + 2.0 * 2.0)


class TestTuningParams:
    def test_from_eps0(self):
        params = TuningParams.from_eps0(0.5, 0.2)
        assert params.ln_eps0 == pytest.approx(math.log(0.5))
        assert params.eps0 == pytest.approx(0.5)

    def test_lambda_below_minimum_is_rejected(self):
        with pytest.raises(ValueError):
            TuningParams(0.0, 0.001, lambda_min=0.01)

    def test_non_finite_is_rejected(self):
        with pytest.raises(ValueError):
            TuningParams(float("nan"), 1.0)

    def test_to_dict_keys(self):
        assert set(TuningParams(0.0, 1.0).to_dict()) == {"ln_eps0", "eps0", "lambda", "lambda_min"}


class TestEpsilon:
    def test_exponential_form(self):
        assert epsilon(TuningParams(0.0, 1.0), 2.0) == pytest.approx(math.exp(2.0))

    def test_increasing_in_h(self):
        params = TuningParams(-2.0, 0.3)
        values = [epsilon(params, h) for h in np.linspace(-3.0, 3.0, 13)]
        assert np.all(np.diff(values) > 0.0)

    def test_overflow_is_clamped(self):
        value, clamped = epsilon_with_flag(TuningParams(0.0, 10.0), 1e5)
        assert clamped
        assert value == EPS_CAP

    def test_non_finite_h(self):
        with pytest.raises(NonFiniteError):
            epsilon(TuningParams(0.0, 1.0), float("inf"))


class TestCompatibilityBound:
    box = BoxSet([-1.0], [1.0])

    def test_positive_denominator(self):
        # sigma_U(2) = 2, s = 1 + 2
        assert compatibility_bound(1.0, [2.0], self.box) == pytest.approx(4.0 / 3.0)

    def test_zero_row(self):
        assert compatibility_bound(0.5, [0.0], self.box) == 0.0
        assert isinstance(compatibility_bound(-0.5, [0.0], self.box), IncompatibleNominal)

    def test_incompatible(self):
        result = compatibility_bound(-5.0, [2.0], self.box)
        assert isinstance(result, IncompatibleNominal)
        assert result.s == pytest.approx(-3.0)

    def test_bound_makes_half_space_touch_the_set(self, example1):
        params_for = lambda eps: TuningParams(math.log(eps), 1e-2)
        x = np.array([1.0, 0.5])
        c, d = lie_terms(example1.plant, example1.barrier, x)
        bound = compatibility_bound(c, d, example1.input_set)
        h = example1.barrier.value(x)
        # eps(h) equal to the bound puts rhs exactly at sigma_U(d)
        params = TuningParams(math.log(bound) - 1e-2 * h, 1e-2)
        _, rhs = tissf_halfspace(example1.plant, example1.barrier, params, x)
        assert rhs == pytest.approx(example1.input_set.support_value(d), rel=1e-12)
        _, rhs_loose = tissf_halfspace(example1.plant, example1.barrier, params_for(10 * bound), x)
        assert rhs_loose < example1.input_set.support_value(d)


class TestEta:
    box = BoxSet([-1.0], [1.0])

    def test_value(self):
        assert eta(1.0, [2.0], self.box) == pytest.approx(math.log(4.0) - math.log(3.0))

    def test_d_floor(self):
        result = eta(1.0, [1e-9], self.box)
        assert isinstance(result, Degenerate)
        assert result.reason == "d_norm_below_floor"

    def test_s_floor(self):
        result = eta(-2.0, [2.0], self.box, DegeneracyFloors(s_min=1e-3))
        assert isinstance(result, Degenerate)
        assert result.reason == "s_below_floor"

    def test_floors_must_be_positive(self):
        with pytest.raises(ValueError):
            DegeneracyFloors(d_min=0.0)


class TestRobustnessMargin:
    def test_value(self):
        # eps = 1, delta = 2, alpha(r) = 2r -> zeta = 1 * 4 / 4 / 2
        assert robustness_margin(TuningParams(0.0, 1.0), LinearClassK(2.0), 0.0, 2.0) == pytest.approx(0.5)

    def test_zero_delta(self):
        assert robustness_margin(TuningParams(0.0, 1.0), LinearClassK(), 3.0, 0.0) == 0.0

    def test_negative_delta(self):
        with pytest.raises(ValueError):
            robustness_margin(TuningParams(0.0, 1.0), LinearClassK(), 0.0, -1.0)

    def test_class_k_gain_must_be_positive(self):
        with pytest.raises(ValueError):
            LinearClassK(0.0)


def test_check_gradient_catches_a_wrong_gradient():
    barrier = BarrierSpec(h=lambda x: float(x[0] ** 2), grad_h=lambda x: np.array([x[0]]), label="bad")
    with pytest.raises(GradientMismatchError):
        check_gradient(barrier, [-1.0], [1.0], n_points=10)


def test_check_gradient_accepts_the_registered_barriers(example1, ccc):
    for case in (example1, ccc):
        assert check_gradient(case.barrier, case.domain.lo, case.domain.hi, n_points=200) < 1e-5


def test_example1_disturbance_respects_its_bound(example1):
    assert example1.disturbance.respects_bound(np.linspace(0.0, 20.0, 401))


def test_compatibility_bound_is_tight_in_both_directions():
    rng = np.random.default_rng(17)
    checked = 0
    while checked < 500:
        m = int(rng.integers(1, 4))
        input_set = BallSet(float(rng.uniform(0.5, 5.0))) if rng.random() < 0.5 else \
            BoxSet(-rng.uniform(0.5, 5.0, m), rng.uniform(0.5, 5.0, m))
        d = rng.standard_normal(m)
        c = float(rng.uniform(-5.0, 5.0))
        bound = compatibility_bound(c, d, input_set)
        if isinstance(bound, IncompatibleNominal):
            continue
        sigma = input_set.support_value(d)
        u_star = input_set.support_point(d)

        rhs_loose = float(d @ d) / (1.000001 * bound) - c
        assert float(d @ u_star) - rhs_loose >= -1e-7

        rhs_tight = float(d @ d) / (0.999 * bound) - c
        assert sigma < rhs_tight
        checked += 1
