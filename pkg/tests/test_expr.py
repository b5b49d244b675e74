import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aeroflat.errors import ConfigError
from aeroflat.expr import UNITS, Expression, expression_series


def test_knot_ramp():
    e = Expression("140*kt*t")
    assert e(1.0) == pytest.approx(140 * 1852 / 3600, rel=1e-15)
    assert not e.constant


def test_unit_values():
    assert UNITS["kt"] == pytest.approx(0.514444, rel=1e-6)
    assert UNITS["ft"] == 0.3048
    assert Expression("180*deg")(0.0) == pytest.approx(math.pi)
    assert Expression("36*kmh")(0.0) == pytest.approx(10.0)


def test_sigmoid_series_at_center():
    s = Expression("0.5 + arctan((t-30)/5)/pi").series(30.0, 4)
    assert s.coeffs[0] == pytest.approx(0.5, abs=1e-15)
    assert s.coeffs[1] == pytest.approx(1 / (5 * math.pi), rel=1e-14)
    assert s.coeffs[2] == pytest.approx(0.0, abs=1e-15)
    # arctan(u) = u - u^3/3: third coefficient is -1/(3*125*pi)
    assert s.coeffs[3] == pytest.approx(-1 / (375 * math.pi), rel=1e-12)


def test_cosine_series_against_closed_form():
    s = expression_series("60*cos(t/100+2)", 7.0, 5)
    ph = 7.0 / 100 + 2
    want = [60 * math.cos(ph), -0.6 * math.sin(ph), -0.003 * math.cos(ph)]
    np.testing.assert_allclose(s.coeffs[:3], want, rtol=1e-13)


def test_power_and_constant():
    e = Expression("0.5*9.80665*t**2")
    s = e.series(2.0, 3)
    np.testing.assert_allclose(s.coeffs, [2 * 9.80665, 2 * 9.80665, 0.5 * 9.80665, 0.0], atol=1e-13)
    c = Expression("pi/2")
    assert c.constant
    assert c.series(1.0, 2).coeffs[1] == 0.0


def test_numeric_input_and_equality():
    assert Expression(3) == Expression("3.0")
    assert hash(Expression("t")) == hash(Expression(" t "))
    assert str(Expression("sin(t)")) == "sin(t)"


@pytest.mark.parametrize("text, fragment", [
    ("t +", "cannot parse"),
    ("foo(t)", "unknown function"),
    ("w*t", "unknown name"),
    ("t**t", "exponent"),
    ("sin(t, 2)", "exactly one"),
    ("t % 2", "unsupported operator"),
    ("'a'", "unsupported literal"),
    ("[t]", "unsupported syntax"),
])
def test_rejects_bad_input(text, fragment):
    with pytest.raises(ConfigError, match=fragment) as ei:
        Expression(text, source="case.yaml:3:5")
    assert "case.yaml:3:5" in str(ei.value)


def test_rejects_non_string():
    with pytest.raises(ConfigError):
        Expression(True)


@settings(max_examples=50, deadline=None)
@given(st.floats(-3, 3), st.floats(0.0, 0.5))
def test_series_matches_evaluation(t0, dt):
    e = Expression("exp(t/4)*sin(t) + sqrt(2 + t*t)")
    s = e.series(t0, 24)
    # radius of convergence is at least sqrt(2)
    assert s(dt) == pytest.approx(e(t0 + dt), rel=1e-9, abs=1e-12)
