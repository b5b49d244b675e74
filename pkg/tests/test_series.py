import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aeroflat import kernels
from aeroflat import series as ts
from aeroflat.errors import NewtonConvergenceError, NewtonWarning, OrderError, SeriesDomainError, SingularityError
from aeroflat.series import SeriesVector, TaylorSeries

ORDER = 8
coef = st.floats(-2.0, 2.0, allow_nan=False)


def series_strategy(order=ORDER, c0=coef):
    return st.tuples(c0, st.lists(coef, min_size=order, max_size=order)).map(
        lambda p: TaylorSeries([p[0]] + p[1]))


def taylor_oracle(f, x0, order):
    return np.array([float(c) for c in mpmath.taylor(f, x0, order)])


@pytest.mark.parametrize("name,mp", [
    ("sin", mpmath.sin), ("cos", mpmath.cos), ("tan", mpmath.tan), ("exp", mpmath.exp),
    ("log", mpmath.log), ("sqrt", mpmath.sqrt), ("arctan", mpmath.atan), ("arcsin", mpmath.asin),
])
def test_elementary_against_arbitrary_precision_taylor(name, mp):
    x0 = 0.3
    s = ts.series_elementary(TaylorSeries.variable(x0, 10), name)
    np.testing.assert_allclose(s.coeffs, taylor_oracle(mp, x0, 10), rtol=1e-12, atol=1e-13)


def test_power_and_composition_against_oracle():
    x0 = 0.7
    t = TaylorSeries.variable(x0, 9)
    s = ts.power(1 + t * t, 1.5) / ts.exp(ts.sin(t))
    oracle = taylor_oracle(lambda x: mpmath.power(1 + x * x, 1.5) / mpmath.exp(mpmath.sin(x)), x0, 9)
    np.testing.assert_allclose(s.coeffs, oracle, rtol=1e-11, atol=1e-13)


def test_geometric_and_binomial_series():
    t = TaylorSeries.variable(0.0, 6)
    np.testing.assert_allclose((1 / (1 - t)).coeffs, np.ones(7))
    binom = [float(mpmath.binomial(0.5, k)) for k in range(7)]
    np.testing.assert_allclose(ts.sqrt(1 + t).coeffs, binom, rtol=1e-14)


def test_atan2_branch_and_unwinding():
    t = TaylorSeries.variable(0.0, 4)
    a = ts.atan2(ts.sin(3.0 + t), ts.cos(3.0 + t))
    np.testing.assert_allclose(a.coeffs, [3.0, 1.0, 0, 0, 0], atol=1e-14)
    wrapped = ts.atan2(ts.sin(3.5 + t), ts.cos(3.5 + t))
    assert -math.pi < wrapped.value <= math.pi
    unwound = ts.atan2(ts.sin(3.5 + t), ts.cos(3.5 + t), reference=3.4)
    assert unwound.value == pytest.approx(3.5)


def test_deriv_integrate_and_evaluation():
    s = TaylorSeries([1.0, 2.0, 3.0, 4.0])
    np.testing.assert_allclose(s.deriv().coeffs, [2.0, 6.0, 12.0])
    np.testing.assert_allclose(s.deriv().integrate(1.0).coeffs, s.coeffs)
    assert s(0.5) == pytest.approx(1 + 1 + 0.75 + 0.5)
    with pytest.raises(OrderError):
        TaylorSeries([1.0]).deriv()


def test_domain_and_division_errors():
    t = TaylorSeries.variable(0.0, 3)
    with pytest.raises(SeriesDomainError):
        ts.log(t)
    with pytest.raises(SeriesDomainError):
        ts.sqrt(t - 1.0)
    with pytest.raises(ZeroDivisionError):
        1.0 / t


@settings(max_examples=60, deadline=None)
@given(series_strategy(), series_strategy(c0=st.floats(0.5, 2.0)))
def test_division_inverts_multiplication(a, b):
    np.testing.assert_allclose(((a * b) / b).coeffs, a.coeffs, rtol=1e-9, atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(series_strategy())
def test_pythagorean_identity(a):
    s, c = ts.sincos(a)
    np.testing.assert_allclose((s * s + c * c).coeffs, np.eye(1, ORDER + 1)[0], atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(series_strategy(c0=st.floats(0.2, 3.0)))
def test_exp_log_inverse(a):
    np.testing.assert_allclose(ts.exp(ts.log(a)).coeffs, a.coeffs, rtol=1e-9, atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(series_strategy(), series_strategy())
def test_product_rule(a, b):
    lhs = (a * b).deriv()
    rhs = a.deriv() * b.truncate(ORDER - 1) + a.truncate(ORDER - 1) * b.deriv()
    np.testing.assert_allclose(lhs.coeffs, rhs.coeffs, rtol=1e-10, atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(series_strategy(), st.floats(-0.3, 0.3))
def test_series_evaluation_matches_polynomial(a, dt):
    assert a(dt) == pytest.approx(np.polyval(a.coeffs[::-1], dt), rel=1e-12, abs=1e-12)


@pytest.mark.skipif("cython" not in kernels.available(), reason="compiled kernels not built")
@pytest.mark.parametrize("fn", ["mul", "div", "exp", "sincos", "sqrt", "log", "power", "horner"])
def test_backends_agree(fn):
    rng = np.random.default_rng(1)
    a = rng.normal(size=12)
    a[0] = 1.5
    b = rng.normal(size=12)
    b[0] = 0.8
    args = {"mul": (a, b), "div": (a, b)}.get(fn, (a,)) + (11,)
    if fn == "power":
        args = (a, 0.37, 11)
    if fn == "horner":
        args = (a, 0.3)
    from aeroflat import _kernels, _kernels_py
    r1 = getattr(_kernels, fn)(*args)
    r2 = getattr(_kernels_py, fn)(*args)
    for x, y in zip(np.atleast_2d(r1), np.atleast_2d(r2)):
        np.testing.assert_allclose(x, y, rtol=1e-13, atol=1e-14)


def test_backend_switch_changes_nothing():
    t = TaylorSeries.variable(0.2, 10)
    ref = ts.arctan(ts.sqrt(1 + t) * ts.exp(t)).coeffs
    for name in kernels.available():
        kernels.set_backend(name)
        try:
            np.testing.assert_allclose(ts.arctan(ts.sqrt(1 + t) * ts.exp(t)).coeffs, ref, rtol=1e-12, atol=1e-14)
        finally:
            kernels.set_backend(kernels.available()[0])


def test_jacobian_against_central_differences():
    def f(u):
        x, y = u
        return [ts.sin(x) * y, ts.exp(x * y) + y * y]
    x0 = np.array([0.4, -0.7])
    J = ts.jacobian(f, x0)
    h = 1e-6
    fd = np.column_stack([(np.array(f(x0 + h * e)) - np.array(f(x0 - h * e))) / (2 * h) for e in np.eye(2)])
    np.testing.assert_allclose(J, fd, rtol=1e-7)


def test_newton_point_converges_and_reports():
    f = lambda u: np.array([u[0] ** 2 - 2.0])
    x, info = ts.newton_point(f, [1.0], tol=1e-12, full_output=True)
    assert x[0] == pytest.approx(math.sqrt(2.0), rel=1e-12)
    assert info.converged and info.residual_norm <= 1e-12


def test_newton_point_failure_modes():
    f = lambda u: np.array([u[0] ** 2 + 1.0])
    with pytest.warns(NewtonWarning):
        ts.newton_point(f, [1.0], tol=1e-12, max_iter=5)
    with pytest.raises(NewtonConvergenceError):
        ts.newton_point(f, [1.0], tol=1e-12, max_iter=5, on_fail="raise")
    with pytest.raises(SingularityError):
        ts.newton_point(lambda u: np.array([u[0] * 0.0 + 1.0]), [1.0], jac=lambda u: np.zeros((1, 1)))


def test_newton_series_doubles_valid_orders_with_exact_jacobian():
    T = TaylorSeries.variable(0.0, 15)
    out, hist = ts.newton_series(lambda y: [y[0] * y[0] - 1 - T], [1.0], 15, jac=lambda y: [[2 * y[0]]],
                                 full_output=True)
    first_nonzero = [int(np.flatnonzero(np.abs(r[0]) > 1e-13)[0]) for r in hist[:-1]]
    assert first_nonzero == [1, 2, 4, 8]
    assert np.max(np.abs(hist[-1])) < 1e-13
    binom = [float(mpmath.binomial(0.5, k)) for k in range(16)]
    np.testing.assert_allclose(out[0].coeffs, binom, rtol=1e-12)


def test_newton_series_finite_difference_jacobian_reaches_target():
    T = TaylorSeries.variable(0.0, 10)
    out = ts.newton_series(lambda y: [y[0] * y[0] * y[0] - 8 - T], [2.0], 10)
    oracle = taylor_oracle(lambda t: mpmath.cbrt(8 + t), 0.0, 10)
    np.testing.assert_allclose(out[0].coeffs, oracle, rtol=1e-10, atol=1e-14)


def test_solve_linear_series_system():
    t = TaylorSeries.variable(0.0, 6)
    M = [[2 + t, t * t], [t, 3 - t]]
    x_true = [ts.exp(t), ts.cos(t)]
    rhs = [M[0][0] * x_true[0] + M[0][1] * x_true[1], M[1][0] * x_true[0] + M[1][1] * x_true[1]]
    x = ts.solve_linear(M, rhs, 6)
    for a, b in zip(x, x_true):
        np.testing.assert_allclose(a.coeffs, b.coeffs, atol=1e-13)
    with pytest.raises(SingularityError):
        ts.solve_linear([[t, t], [t, t]], rhs, 6)


def test_series_vector_access():
    sv = SeriesVector({"a": TaylorSeries([1.0, 2.0]), "b": TaylorSeries([3.0])}, base_time=1.0)
    assert sv.constants() == {"a": 1.0, "b": 3.0}
    assert sv.at(1.5)["a"] == pytest.approx(2.0)
    assert "a" in sv and list(sv.keys()) == ["a", "b"]


@pytest.mark.parametrize("terms", [0, 3, 8])
def test_lag_inverse_series_tail(terms):
    # truncated minus exact is minus the geometric tail 2 (-2 eps)^(n+1) / (1 + 2 eps)
    eps = 0.1
    x = ts.exp(2 * TaylorSeries.variable(0.0, terms + 3))
    y = ts.lag_inverse_series(x, eps, terms)
    assert y.order == 2
    tail = -2 * (-2 * eps) ** (terms + 1) / (1 + 2 * eps)
    assert y.value - 2 / (1 + 2 * eps) == pytest.approx(tail, rel=1e-9)
    with pytest.raises(OrderError):
        ts.lag_inverse_series(x, eps, terms + 3)
