import numpy as np
import pytest
from hypothesis import given, strategies as st

from mvreins.curves import (CurveRangeError, PiecewiseConstantCurve,
                            SampledCurve, as_curve)


def test_as_curve_scalar():
    c = as_curve(0.04)
    assert c.is_constant
    assert c(0.0) == 0.04
    assert c(123.0) == 0.04


def test_as_curve_pairs():
    c = as_curve([(0.0, 0.04), (50.0, 0.05)])
    assert not c.is_constant
    assert c(0.0) == 0.04
    assert c(49.999) == 0.04
    assert c(50.0) == 0.05  # right-continuous
    assert c(80.0) == 0.05


def test_piecewise_integral_exact():
    c = as_curve([(0.0, 0.04), (50.0, 0.05)])
    assert c.integral(0.0, 100.0) == pytest.approx(0.04 * 50 + 0.05 * 50, rel=1e-15)
    assert c.integral(40.0, 60.0) == pytest.approx(0.04 * 10 + 0.05 * 10, rel=1e-15)
    assert c.integral(60.0, 40.0) == pytest.approx(-(0.04 * 10 + 0.05 * 10), rel=1e-15)


def test_piecewise_must_start_at_zero():
    with pytest.raises(ValueError):
        PiecewiseConstantCurve(np.array([1.0]), np.array([2.0]))


def test_sampled_exact_at_nodes():
    grid = np.array([0.0, 1.0, 2.5, 4.0])
    vals = np.array([1.0, -2.0, 7.0, 3.0])
    c = SampledCurve(grid, vals)
    for g, v in zip(grid, vals):
        assert c(g) == v


def test_sampled_midpoint_interpolation():
    c = SampledCurve(np.array([0.0, 1.0]), np.array([0.0, 2.0]))
    assert c(0.5) == 1.0


def test_sampled_out_of_range():
    c = SampledCurve(np.array([0.0, 1.0]), np.array([0.0, 2.0]))
    with pytest.raises(CurveRangeError):
        c(2.0)
    with pytest.raises(CurveRangeError):
        c(-0.5)


def test_sampled_vector_valued():
    grid = np.array([0.0, 1.0])
    vals = np.array([[1.0, 10.0], [3.0, 30.0]])
    c = SampledCurve(grid, vals)
    np.testing.assert_allclose(c(0.5), [2.0, 20.0])
    assert c.component(1)(1.0) == 30.0


@given(st.lists(st.floats(min_value=-100, max_value=100), min_size=2,
                max_size=30))
def test_sampled_monotone_consistent(values):
    values = sorted(values)
    grid = np.arange(len(values), dtype=float)
    if len(set(values)) < 2:
        values = [v + i * 1e-9 for i, v in enumerate(values)]
    c = SampledCurve(grid, np.array(values))
    ts = np.linspace(0.0, len(values) - 1.0, 101)
    out = c(ts)
    lo = np.floor(ts).astype(int)
    hi = np.minimum(lo + 1, len(values) - 1)
    vals = np.asarray(values)
    assert np.all(out >= np.minimum(vals[lo], vals[hi]) - 1e-12)
    assert np.all(out <= np.maximum(vals[lo], vals[hi]) + 1e-12)


def test_scalar_evaluators_agree_with_call():
    pc = as_curve([(0.0, 1.0), (2.0, -1.0), (5.0, 4.0)])
    ev = pc.scalar_evaluator()
    for t in [0.0, 1.99, 2.0, 4.7, 5.0, 9.0]:
        assert ev(t) == pc(t)
    sc = SampledCurve(np.array([0.0, 1.0, 2.0]), np.array([0.0, 2.0, -4.0]))
    ev2 = sc.scalar_evaluator()
    for t in [0.0, 0.25, 1.0, 1.5, 2.0]:
        assert ev2(t) == pytest.approx(sc(t), abs=1e-15)
