import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tauline import StepFunction, SurvivalCurve, integrate, stieltjes_sum
from tauline.errors import ValidationError
from tauline.stepfn import PiecewiseLinear


def test_eval_between_jumps():
    f = StepFunction([1, 3], [0.8, 0.2], 1.0)
    assert f(2.5) == 0.8
    assert f(0.5) == 1.0
    assert f(1.0) == 0.8  # right-continuous
    assert f(3.0) == 0.2
    assert f.eval(99) == 0.2
    assert f.left_limit(1.0) == 1.0
    assert f.left_limit(3.0) == 0.8
    np.testing.assert_array_equal(f([0, 1, 2, 3]), [1.0, 0.8, 0.8, 0.2])


def test_integrate_hand_areas():
    f = StepFunction([1, 3], [0.8, 0.2], 1.0)
    assert integrate(f, 0, 4) == pytest.approx(1.0 + 0.8 * 2 + 0.2 * 1, abs=1e-15)
    assert f.integrate(2, 2) == 0.0
    assert f.cumulative_integral(4) == pytest.approx(2.8)
    with pytest.raises(ValueError):
        integrate(f, 3, 1)


def test_stieltjes_closed_endpoint_and_empty():
    F = StepFunction([1, 2], [0.25, 1.0], 0.0)
    g = StepFunction([1.5], [0.5], 1.0)
    # mass at u = t counts; g is taken right-continuously
    assert stieltjes_sum(g, F, 2.0) == pytest.approx(1.0 * 0.25 + 0.5 * 0.75)
    assert stieltjes_sum(g, F, 1.999) == pytest.approx(0.25)
    assert stieltjes_sum(g, F, 0.5) == 0.0


def test_survival_curve_validation():
    SurvivalCurve([1, 2], [0.5, 0.5], 1.0)
    with pytest.raises(ValidationError):
        SurvivalCurve([1, 2], [0.5, 0.6], 1.0)
    with pytest.raises(ValidationError):
        SurvivalCurve([1], [0.5], 0.9)
    with pytest.raises(ValidationError):
        SurvivalCurve([1], [-0.1], 1.0)
    with pytest.raises(ValidationError):
        StepFunction([2, 1], [0, 0])


def test_piecewise_linear_flat_beyond_last_knot():
    p = PiecewiseLinear([0, 2], [0, 1])
    assert p(1) == 0.5
    assert p(5) == 1.0


steps = st.integers(0, 15).flatmap(lambda n: st.tuples(
    st.lists(st.floats(0, 50, allow_nan=False), min_size=n, max_size=n, unique=True),
    st.lists(st.floats(-2, 2, allow_nan=False), min_size=n, max_size=n),
    st.floats(-2, 2, allow_nan=False)))


def _mk(args):
    t, v, init = args
    order = np.argsort(t)
    return StepFunction(np.asarray(t)[order], np.asarray(v)[order], init)


@settings(max_examples=300, deadline=None)
@given(steps, st.lists(st.floats(0, 60, allow_nan=False), min_size=1, max_size=10))
def test_eval_matches_linear_scan(args, queries):
    f = _mk(args)
    for q in queries:
        naive = f.initial_value
        for tj, vj in zip(f.jump_times, f.values):
            if tj <= q:
                naive = vj
        assert f(q) == naive


@settings(max_examples=300, deadline=None)
@given(steps, st.lists(st.floats(0, 60, allow_nan=False), min_size=3, max_size=3))
def test_integrate_additive(args, pts):
    f = _mk(args)
    a, b, c = sorted(pts)
    assert integrate(f, a, c) == pytest.approx(integrate(f, a, b) + integrate(f, b, c),
                                               abs=1e-12 * max(1.0, c))
    assert f.cumulative_integral(c) - f.cumulative_integral(a) == pytest.approx(
        integrate(f, a, c), abs=1e-11 * max(1.0, c))


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0.01, 1.0), min_size=1, max_size=10),
       st.lists(st.floats(0, 50, allow_nan=False), min_size=10, max_size=10, unique=True))
def test_stieltjes_of_one_is_total_mass(masses, times):
    w = np.asarray(masses) / np.sum(masses)
    t = np.sort(times)[:w.size]
    F = StepFunction(t, np.cumsum(w), 0.0)
    one = StepFunction.constant(1.0)
    assert stieltjes_sum(one, F, np.inf) == pytest.approx(1.0, abs=1e-12)
