import math
import warnings

import numpy as np
import pytest

from aeroflat import aero
from aeroflat import series as ts
from aeroflat.errors import ChartError, SingularityError
from aeroflat.flatplan import (
    ControlMode,
    FlatOutputChoice,
    FlatOutputTrajectory,
    WarmStart,
    determinant_threshold,
    flat_parametrization,
    flight_point,
    lift_maximum,
    singularity_check,
    stage1_invert,
    staged_order,
    time_series,
)
from aeroflat.genflat import simplified_model_residual


def relative_residual(sv, params, h=None):
    res = simplified_model_residual(sv, params, h)
    worst = 0.0
    for k, c in res.items():
        scale = max(1.0, float(np.max(np.abs(sv[k].deriv().coeffs))))
        worst = max(worst, float(np.max(np.abs(c))) / scale)
    return worst


def test_stage1_straight_climb():
    t = ts.TaylorSeries.variable(0.0, 4)
    V, g, c = stage1_invert(30.0 * t, 10.0 * t, -3.0 * t)
    assert V.value == pytest.approx(math.sqrt(900 + 100 + 9))
    assert g.value == pytest.approx(math.asin(3 / math.sqrt(1009)))
    assert c.value == pytest.approx(math.atan2(10, 30))
    assert V.order == 3
    np.testing.assert_allclose(V.coeffs[1:], 0.0, atol=1e-12)


def test_stage1_vertical_path_is_a_chart_error():
    t = ts.TaylorSeries.variable(0.0, 4)
    with pytest.raises(ChartError):
        stage1_invert(0.0 * t, 0.0 * t, -5.0 * t)


def test_heading_unwinds_with_reference():
    t = ts.TaylorSeries.variable(0.0, 3)
    _, _, c = stage1_invert(-30.0 * t, -1.0 * t, 0.0 * t, chi_reference=3.1)
    assert c.value == pytest.approx(math.atan2(-1, -30) + 2 * math.pi)


@pytest.mark.parametrize("kind", ["beta", "mu", "thrust", "combo"])
def test_round_trip_through_simplified_dynamics(gtm, slip_traj, kind):
    if kind == "combo":
        choice = FlatOutputChoice("combo", 1.0, 0.5)
        traj = FlatOutputTrajectory(slip_traj.x, slip_traj.y, slip_traj.z, zeta=0.4)
    elif kind == "thrust":
        choice, traj = FlatOutputChoice("thrust"), slip_traj
    else:
        choice = FlatOutputChoice(kind)
        traj = FlatOutputTrajectory(slip_traj.x, slip_traj.y, slip_traj.z, zeta=lambda t: 0.2 + 0.01 * t)
    sv = flat_parametrization(3.0, 9, traj, choice, params=gtm)
    assert relative_residual(sv, gtm) < 1e-10
    for k in sv.keys():
        assert sv[k].order == staged_order(k, 9)


def test_round_trip_with_differential_thrust_as_control(twin_otter):
    traj = FlatOutputTrajectory(x=lambda t: 72.0 * t, y=0.0, z=0.0, zeta=0.0)
    mode = ControlMode("eta", delta_n=lambda t: 0.01 * t)
    sv = flat_parametrization(1.0, 8, traj, FlatOutputChoice("beta"), params=twin_otter, mode=mode)
    assert relative_residual(sv, twin_otter) < 1e-10
    assert sv["delta_n"].value == pytest.approx(0.01)


def test_round_trip_with_force_block_estimate(gtm, roll_traj):
    t0 = -1.0
    h = {"p": 1.5, "q": 0.1, "r": -0.05, "delta_l": -0.2, "delta_m": 0.05, "delta_n": 0.02}
    sv = flat_parametrization(t0, 8, roll_traj, FlatOutputChoice("mu"), h_estimate=h, params=gtm)
    assert relative_residual(sv, gtm, h) < 1e-10


def test_flat_outputs_are_reproduced(gtm, roll_traj):
    sv = flat_parametrization(0.5, 8, roll_traj, FlatOutputChoice("mu"), params=gtm)
    mu = time_series(roll_traj.zeta, 0.5, sv["mu"].order)
    np.testing.assert_allclose(sv["mu"].coeffs, mu.coeffs, atol=1e-10)
    assert flight_point(sv).x == pytest.approx(100 / 3.6 * 0.5)


def test_warm_start_is_updated(gtm, roll_traj):
    warm = WarmStart()
    sv = flat_parametrization(0.0, 6, roll_traj, FlatOutputChoice("mu"), warm=warm, params=gtm)
    np.testing.assert_allclose(warm.x, [sv[k].value for k in ("alpha", "beta", "mu", "F")])
    assert warm.chi == pytest.approx(sv["chi"].value)


def test_thrust_output_singular_in_symmetric_glide(gtm):
    from aeroflat.genflat import TrimProblem, trim_values
    vals = trim_values(TrimProblem({"alpha": 0.15, "beta": 0.0, "F": 0.0, "chi_dot": 0.0}, model="simplified"), gtm)
    V, g = vals["V"], vals["gamma"]
    traj = FlatOutputTrajectory(x=lambda t: V * math.cos(g) * t, y=0.0, z=lambda t: -V * math.sin(g) * t, zeta=0.0)
    warm = WarmStart(x=np.array([0.15, 0.0, 0.0, 0.0]))
    with pytest.raises(SingularityError, match="thrust determinant") as ei:
        flat_parametrization(0.0, 6, traj, FlatOutputChoice("thrust"), warm=warm, params=gtm)
    assert getattr(ei.value, "stage", None) == 2


def test_thrust_determinant_vanishes_at_zero_sideslip_and_bank(gtm):
    pt = aero.FlightPoint(V=30.0, gamma=-0.1, alpha=0.1, F=3.0)
    det = singularity_check(pt, "thrust", gtm)
    assert abs(det["thrust"]) < determinant_threshold(gtm, 30.0)


def test_mu_determinant_vanishes_at_lift_maximum(gtm):
    def level_point(alpha):
        # thrust balancing the axial force, as in the scan
        X0, _, _ = aero.force_block(gtm, 30.0, 0.0, 0.0, alpha, 0.0, 0.0)
        return aero.FlightPoint(V=30.0, alpha=alpha, F=-X0 / math.cos(alpha + gtm.eps))

    a_star = lift_maximum(gtm, 30.0)
    assert 0.1 < a_star < 0.6
    d_star = singularity_check(level_point(a_star), "mu", gtm)["mu"]
    d_nom = singularity_check(level_point(0.1), "mu", gtm)["mu"]
    assert abs(d_star) <= 1e-3 * abs(d_nom)


def test_determinants_against_finite_differences(gtm):
    from aeroflat.flatplan import _stage2_forces
    pt = aero.FlightPoint(V=29.0, gamma=-0.2, alpha=0.12, beta=0.3, mu=0.35, F=0.0)
    f = _stage2_forces(gtm, pt.V, pt.gamma, (0.0,) * 6)
    u0 = np.array([pt.alpha, pt.beta, pt.mu, pt.F])
    h = 1e-6
    J = np.column_stack([(np.array(f(u0 + h * e)) - np.array(f(u0 - h * e))) / (2 * h) for e in np.eye(4)])
    X, A, B, Y, Z = range(5)

    def schur(rows, cols, er, ec):
        return np.linalg.det(J[np.ix_(rows, cols)] - np.outer(J[rows, ec], J[er, cols]) / J[er, ec])

    det = singularity_check(pt, "beta", gtm, h_estimate={})
    assert det["beta"] == pytest.approx(schur([B, A], [0, 2], X, 3), rel=1e-6)
    assert det["mu"] == pytest.approx(schur([Z, Y], [0, 1], X, 3), rel=1e-6)
    assert det["thrust"] == pytest.approx(schur([X, Z], [0, 2], A, 1), rel=1e-6)


def test_order_too_small(gtm, level_traj):
    with pytest.raises(ts.OrderError):
        flat_parametrization(0.0, 3, level_traj, FlatOutputChoice("beta"), params=gtm)
