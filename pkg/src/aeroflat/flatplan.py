"""Staged inversion from flat-output series to state and control series.

The four stages mirror the chained structure of the model:

1. positions -> (V, gamma, chi)                     closed form
2. (V, gamma, chi)' and zeta -> (alpha, beta, mu, F)   Newton (point, then series)
3. attitude rates -> (p, q, r)                      closed-form linear solve
4. (p, q, r)' -> control deflections                affine series solve

Stage h returns series of order ``kappa - h + 1`` when the positions are given
at order ``kappa``.
"""
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import aero
from . import series as ts
from .errors import (
    ChartError,
    ConfigError,
    NewtonConvergenceError,
    NewtonWarning,
    SingularityError,
    annotate,
)
from .series import SeriesVector, TaylorSeries

CHOICES = ("beta", "mu", "thrust", "combo")

STAGE = {
    "x": 1, "y": 1, "z": 1,
    "V": 2, "gamma": 2, "chi": 2,
    "alpha": 3, "beta": 3, "mu": 3, "F": 3,
    "p": 4, "q": 4, "r": 4,
    "delta_l": 5, "delta_m": 5, "delta_n": 5, "eta": 5,
}
QUANTITIES = tuple(STAGE)

# relative size of a determinant below which a chart is declared singular
DET_THRESHOLD = 1e-6


def staged_order(name, kappa):
    return kappa - STAGE[name] + 1


def _as_function(f):
    if f is None:
        return lambda t: 0.0
    if callable(f):
        return f
    c = float(f)
    return lambda t: c


def time_series(f, t0, order):
    """Taylor expansion of a series-aware callable ``f(t)`` at ``t0``."""
    v = f(TaylorSeries.variable(t0, order))
    if isinstance(v, TaylorSeries):
        if v.order < order:
            raise ConfigError("time function lost order; it must be built from smooth operations")
        return v.truncate(order)
    return TaylorSeries.constant(float(v), order)


# generators for trajectories written directly in Python ----------------------

def polynomial(*coeffs, t0=0.0):
    """c0 + c1 (t - t0) + c2 (t - t0)**2 + ..."""
    cs = [float(c) for c in coeffs]

    def f(t):
        u = t - t0
        acc = 0.0
        for c in reversed(cs):
            acc = acc * u + c
        return acc
    return f


def sinusoid(amplitude, omega, phase=0.0):
    return lambda t: amplitude * ts.sin(omega * t + phase)


def arctan_sigmoid(center, width, low=0.0, high=1.0):
    """Smooth step from ``low`` to ``high`` centred at ``center``."""
    mid, half = 0.5 * (low + high), (high - low) / math.pi
    return lambda t: mid + half * ts.arctan((t - center) / width)


@dataclass(frozen=True)
class FlatOutputChoice:
    kind: str = "beta"
    f1: object = None
    f2: object = None

    def __post_init__(self):
        if self.kind not in CHOICES:
            raise ConfigError(f"flat output must be one of {CHOICES}, got {self.kind!r}")
        if self.kind == "combo" and (self.f1 is None or self.f2 is None):
            raise ConfigError("combo flat output needs both weights f1 and f2")

    def weights(self, t0, order):
        w1 = time_series(_as_function(self.f1), t0, order)
        w2 = time_series(_as_function(self.f2), t0, order)
        if w1.value == 0.0 and w2.value == 0.0:
            raise SingularityError(f"combo weights both vanish at t={t0}")
        return w1, w2


@dataclass(frozen=True)
class FlatOutputTrajectory:
    """Four series-aware time functions x(t), y(t), z(t), zeta(t)."""

    x: object
    y: object
    z: object
    zeta: object = 0.0

    def series(self, name, t0, order):
        return time_series(_as_function(getattr(self, name)), t0, order)

    def positions(self, t0, order):
        return tuple(self.series(n, t0, order) for n in ("x", "y", "z"))


@dataclass(frozen=True)
class ControlMode:
    """Which control closes the yaw channel.

    ``u4="delta_n"``: eta is the given time function ``eta`` and the rudder is solved for.
    ``u4="eta"``: the rudder follows ``delta_n`` and differential thrust is solved for.
    """

    u4: str = "delta_n"
    eta: object = 0.0
    delta_n: object = 0.0

    def __post_init__(self):
        if self.u4 not in ("delta_n", "eta"):
            raise ConfigError(f"u4 must be 'delta_n' or 'eta', got {self.u4!r}")


@dataclass
class WarmStart:
    """Per-plan Newton memory: constant terms of (alpha, beta, mu, F) and chi."""

    x: object = None
    chi: object = None

    def copy(self):
        return WarmStart(None if self.x is None else np.array(self.x), self.chi)


def _h_tuple(h, order=None):
    out = []
    for n in aero.H_NAMES:
        v = 0.0 if h is None else h.get(n, 0.0)
        if isinstance(v, TaylorSeries) and order is not None:
            v = v.extend(order)
        out.append(v)
    return tuple(out)


def _h_const(h):
    return tuple(ts.const_term(v) for v in _h_tuple(h))


# stage 1 -------------------------------------------------------------------

def stage1_invert(xs, ys, zs, chi_reference=None):
    """(V, gamma, chi) from position series; returned at one order less."""
    dx, dy, dz = xs.deriv(), ys.deriv(), zs.deriv()
    v2 = dx * dx + dy * dy + dz * dz
    if v2.value <= 0.0:
        raise ChartError("zero ground speed: V = 0")
    V = ts.sqrt(v2)
    s = dz / V
    if abs(s.value) >= 1.0 - 1e-12:
        raise ChartError("cos(gamma) = 0: vertical flight path")
    gamma = -ts.arcsin(s)
    if dx.value == 0.0 and dy.value == 0.0:
        raise ChartError("V cos(gamma) = 0: heading undefined")
    chi = ts.atan2(dy, dx, reference=chi_reference)
    return V, gamma, chi


# stage 2 -------------------------------------------------------------------

def _zeta_residual(choice, mg, zeta, w=None):
    if choice.kind == "beta":
        return lambda a, b, m, F: b - zeta
    if choice.kind == "mu":
        return lambda a, b, m, F: m - zeta
    if choice.kind == "thrust":
        return lambda a, b, m, F: (F - zeta) * (1.0 / mg)
    w1, w2 = w
    return lambda a, b, m, F: w1 * b + w2 * m - zeta


def _stage2_residual(params, V, gamma, dV, dgamma, dchi, h, zres):
    m, mg = params.m, params.m * params.g
    inv = 1.0 / mg
    cg = ts.cos(gamma)
    mV = m * V

    def res(u):
        alpha, beta, mu, F = u
        X, Y, Z = aero.force_block(params, V, gamma, mu, alpha, beta, F, *h)
        sm, cm = ts.sincos(mu)
        return [
            (X - m * dV) * inv,
            (-(Y * sm + Z * cm) - mV * dgamma) * inv,
            ((Y * cm - Z * sm) - (mV * cg) * dchi) * inv,
            zres(alpha, beta, mu, F),
        ]
    return res


def _seeds(params, warm):
    if warm is not None and warm.x is not None:
        yield np.array(warm.x, dtype=float)
    mg = params.m * params.g
    yield np.zeros(4)
    # sideslipped seeds reach the branches where beta = mu = 0 is singular
    for a in (0.05, 0.15, -0.05):
        for b, m in ((0.0, 0.0), (0.3, 0.3), (-0.3, -0.3)):
            for F in (0.0, 0.2 * mg):
                yield np.array([a, b, m, F])


def stage2_solve(V, gamma, chi, zeta, choice, h_estimate, warm, params, t0=0.0, order=None,
                 newton_tol=1e-10):
    """(alpha, beta, mu, F) series satisfying the velocity equations and the
    zeta definition. ``V, gamma, chi`` are given at one order more than the
    result; ``order`` defaults to ``order(V) - 1``."""
    n = (V.order - 1) if order is None else order
    if n < 0:
        raise ts.OrderError("stage 2 needs velocity series of order >= 1")
    dV, dgamma, dchi = (s.deriv().truncate(n) for s in (V, gamma, chi))
    Vn, gn = V.truncate(n), gamma.truncate(n)
    zeta = zeta.truncate(n) if isinstance(zeta, TaylorSeries) else TaylorSeries.constant(zeta, n)
    mg = params.m * params.g
    w = choice.weights(t0, n) if choice.kind == "combo" else None

    # constant terms: Newton with exact Jacobian
    w0 = None if w is None else (w[0].value, w[1].value)
    zres0 = _zeta_residual(choice, mg, zeta.value, w0)
    res0 = _stage2_residual(params, Vn.value, gn.value, dV.value, dgamma.value, dchi.value,
                            _h_const(h_estimate), zres0)

    def f0(u):
        return np.array([ts.const_term(r) for r in res0(list(u))])

    def j0(u):
        return ts.jacobian(res0, u)

    best = None
    for seed in _seeds(params, warm):
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", NewtonWarning)
                u, info = ts.newton_point(f0, seed, tol=newton_tol, max_iter=30, jac=j0, full_output=True)
        except SingularityError:
            continue
        if best is None or info.residual_norm < best[1].residual_norm:
            best = (u, info)
        if info.converged and abs(u[0]) < 1.2 and abs(u[1]) < 1.2:
            break
    if best is None:
        raise SingularityError(f"stage 2 Jacobian singular for every starting point at t={t0}")
    u, info = best
    if not info.converged:
        pt = aero.FlightPoint(V=Vn.value, gamma=gn.value, alpha=u[0], beta=u[1], mu=u[2], F=u[3])
        _raise_if_singular(pt, choice, params, h_estimate, t0, w0)
        if info.residual_norm > 1e-3 or not np.isfinite(info.residual_norm):
            raise NewtonConvergenceError(
                f"stage 2 Newton did not converge at t={t0} (residual {info.residual_norm:.3e})",
                x=u, residual_norm=info.residual_norm)
        warnings.warn(NewtonWarning(f"stage 2 Newton residual {info.residual_norm:.3e} at t={t0}",
                                    x=u, residual_norm=info.residual_norm), stacklevel=2)
    pt = aero.FlightPoint(V=Vn.value, gamma=gn.value, alpha=u[0], beta=u[1], mu=u[2], F=u[3])
    _raise_if_singular(pt, choice, params, h_estimate, t0, w0)
    if warm is not None:
        warm.x = np.array(u)
    if n == 0:
        return tuple(TaylorSeries([v]) for v in u)

    # higher orders: Newton on series
    zres = _zeta_residual(choice, mg, zeta, w)
    res = _stage2_residual(params, Vn, gn, dV, dgamma, dchi, _h_tuple(h_estimate, n), zres)
    sol = ts.newton_series(res, list(u), n)
    return tuple(sol)


def _raise_if_singular(pt, choice, params, h, t0, weights=None):
    det = singularity_check(pt, choice, params, h_estimate=h, weights=weights)
    name = _condition_name(choice)
    thr = DET_THRESHOLD * aero.dynamic_pressure_area(params, ts.const_term(pt.V)) ** 2
    if not abs(det[name]) >= thr:
        raise SingularityError(
            f"{name} determinant {det[name]:.3e} below threshold {thr:.3e} at t={t0} "
            f"(flat output '{choice.kind}')")


def _condition_name(choice):
    return {"beta": "beta", "mu": "mu", "thrust": "thrust", "combo": "combo"}[choice.kind]


# singularity determinants ---------------------------------------------------

def _stage2_forces(params, V, gamma, h):
    """(X, A, B, Y, Z) as functions of (alpha, beta, mu, F), where
    A = Y cos(mu) - Z sin(mu) drives chi' and B = Y sin(mu) + Z cos(mu) drives gamma'."""
    def f(u):
        alpha, beta, mu, F = u
        X, Y, Z = aero.force_block(params, V, gamma, mu, alpha, beta, F, *h)
        sm, cm = ts.sincos(mu)
        return [X, Y * cm - Z * sm, Y * sm + Z * cm, Y, Z]
    return f


def _schur(J, rows, cols, elim_row, elim_col):
    """2x2 block after eliminating ``elim_col`` through equation ``elim_row``."""
    piv = J[elim_row, elim_col]
    if piv == 0.0:
        return float("nan")
    M = J[np.ix_(rows, cols)] - np.outer(J[rows, elim_col], J[elim_row, cols]) / piv
    return float(np.linalg.det(M))


def singularity_check(point, choice, params, h_estimate=None, weights=None):
    """Determinants of the stage-2 regularity conditions at ``point``.

    * ``beta``: d(B, A)/d(alpha, mu) with F eliminated through X
    * ``mu``: d(Z, Y)/d(alpha, beta) with F eliminated through X
    * ``thrust``: d(X, Z)/d(alpha, mu) with beta eliminated through A
    * ``combo``: determinant of the full 4x4 stage-2 system (force units)

    Derivatives are exact (forward-mode on order-1 series). Values carry units
    of force squared and are compared against ``1e-6 * (rho S V**2 / 2)**2``.
    ``weights`` gives the combo weights at the point (constants of f1, f2
    evaluated at t=0 when omitted).
    """
    if isinstance(choice, str):
        choice = FlatOutputChoice(choice) if choice != "combo" else FlatOutputChoice("combo", 1.0, 1.0)
    pt = point.constants() if isinstance(point, aero.FlightPoint) else point
    h = _h_const(h_estimate) if h_estimate is not None else tuple(ts.const_term(getattr(pt, n)) for n in aero.H_NAMES)
    u = np.array([pt.alpha, pt.beta, pt.mu, pt.F], dtype=float)
    J = ts.jacobian(_stage2_forces(params, pt.V, pt.gamma, h), u)
    X, A, B, Y, Z = range(5)
    a, b, m, F = range(4)
    out = {
        "beta": _schur(J, [B, A], [a, m], X, F),
        "mu": _schur(J, [Z, Y], [a, b], X, F),
        "thrust": _schur(J, [X, Z], [a, m], A, b),
    }
    if choice.kind == "combo":
        if weights is None:
            weights = [ts.const_term(f) if not callable(f) else ts.const_term(f(0.0)) for f in (choice.f1, choice.f2)]
        w1, w2 = weights
        K = np.zeros((4, 4))
        K[:3] = J[[X, B, A]]
        K[3] = [0.0, w1, w2, 0.0]
        out["combo"] = float(np.linalg.det(K))
    return out


def determinant_threshold(params, V):
    return DET_THRESHOLD * aero.dynamic_pressure_area(params, V) ** 2


def lift_maximum(params, V, gamma=0.0, dV=0.0, beta=0.0, mu=0.0, alpha_range=(-0.2, 0.8), n=401,
                 h_estimate=None):
    """Angle of attack maximising lift with thrust eliminated through X.

    The scan evaluates -Z~(alpha) on a grid (Z positive down, so -Z is the
    upward force) and refines the best grid point by golden-section search.
    """
    h = _h_const(h_estimate)
    m = params.m

    def lift(alpha):
        ae = alpha + params.eps
        X0, _, Z0 = aero.force_block(params, V, gamma, mu, alpha, beta, 0.0, *h)
        F = (m * dV - X0) / (math.cos(ae) * math.cos(beta))
        Z = Z0 - F * math.sin(ae)
        return -Z

    grid = np.linspace(alpha_range[0], alpha_range[1], n)
    vals = np.array([lift(a) for a in grid])
    k = int(np.argmax(vals))
    if k in (0, n - 1):
        raise ValueError("lift maximum not bracketed by the scan range")
    lo, hi = grid[k - 1], grid[k + 1]
    g = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = hi - g * (hi - lo), lo + g * (hi - lo)
    fc, fd = lift(c), lift(d)
    for _ in range(80):
        if fc > fd:
            hi, d, fd = d, c, fc
            c = hi - g * (hi - lo)
            fc = lift(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + g * (hi - lo)
            fd = lift(d)
    return 0.5 * (lo + hi)


# stage 3 -------------------------------------------------------------------

def stage3_solve(alpha, beta, mu, V, gamma, chi, params, F=0.0, h_estimate=None, order=None):
    """Body rates from the attitude kinematics.

    Solves the linear (in p, q, r) attitude equations in closed form; the side
    and normal forces use the same frozen values as stage 2.
    """
    n = min(alpha.order, beta.order, mu.order) - 1 if order is None else order
    if n < 0:
        raise ts.OrderError("stage 3 needs attitude series of order >= 1")
    if abs(math.cos(beta.value)) < 1e-12:
        raise ChartError("cos(beta) = 0 in stage 3")
    tr = lambda s: s.truncate(n) if isinstance(s, TaylorSeries) else s  # noqa: E731
    h = _h_tuple(h_estimate, n + 1)
    _, Y, Z = aero.force_block(params, V.truncate(n + 1), gamma.truncate(n + 1), mu.truncate(n + 1),
                               alpha.truncate(n + 1), beta.truncate(n + 1),
                               F.truncate(n + 1) if isinstance(F, TaylorSeries) else F, *h)
    Y, Z = tr(Y), tr(Z)
    da, db, dm = (s.truncate(n + 1).deriv() for s in (alpha, beta, mu))
    dchi = chi.deriv().truncate(n)
    a, b, g = alpha.truncate(n), beta.truncate(n), gamma.truncate(n)
    mV = params.m * V.truncate(n)
    sa, ca = ts.sincos(a)
    sb, cb = ts.sincos(b)
    w = cb * (dm - dchi * ts.sin(g)) + sb * Z / mV
    v = db - Y / mV
    p = w * ca + v * sa
    r = w * sa - v * ca
    q = da + (sb / cb) * w - Z / (mV * cb)
    return p, q, r


# stage 4 -------------------------------------------------------------------

def stage4_solve(p, q, r, state, params, mode=None, t0=0.0, order=None):
    """Control deflections realising the body-rate series.

    ``state`` maps V, alpha, beta, F to series. With ``mode.u4 == "delta_n"``
    returns (delta_l, delta_m, delta_n, eta) with eta given; with
    ``mode.u4 == "eta"`` the rudder is given and eta is solved for.
    """
    mode = mode or ControlMode()
    n = min(p.order, q.order, r.order) - 1 if order is None else order
    if n < 0:
        raise ts.OrderError("stage 4 needs rate series of order >= 1")
    tr = lambda s: s.truncate(n) if isinstance(s, TaylorSeries) else s  # noqa: E731
    V, alpha, beta, F = (tr(state[k]) for k in ("V", "alpha", "beta", "F"))
    dp, dq, dr = (s.truncate(n + 1).deriv() for s in (p, q, r))
    pn, qn, rn = tr(p), tr(q), tr(r)
    I = params.inertia
    Iw = [I[i, 0] * dp + I[i, 1] * dq + I[i, 2] * dr for i in range(3)]
    gyro = aero.rate_rhs(params, pn, qn, rn, 0.0, 0.0, 0.0)
    required = [Iw[i] - gyro[i] for i in range(3)]

    if mode.u4 == "delta_n":
        fixed = time_series(_as_function(mode.eta), t0, n)
        unknown = ("delta_l", "delta_m", "delta_n")

        def torques(dl, dm, u):
            return aero.torque_block(params, V, alpha, beta, pn, qn, rn, F, fixed, dl, dm, u)
    else:
        fixed = time_series(_as_function(mode.delta_n), t0, n)
        unknown = ("delta_l", "delta_m", "eta")

        def torques(dl, dm, u):
            return aero.torque_block(params, V, alpha, beta, pn, qn, rn, F, u, dl, dm, fixed)

    T0 = torques(0.0, 0.0, 0.0)
    cols = []
    for j in range(3):
        e = [0.0, 0.0, 0.0]
        e[j] = 1.0
        Tj = torques(*e)
        cols.append([Tj[i] - T0[i] for i in range(3)])
    Mx = [[cols[j][i] for j in range(3)] for i in range(3)]
    rhs = [required[i] - T0[i] for i in range(3)]
    sol = ts.solve_linear(Mx, rhs, n, what="control-effectiveness matrix")
    out = dict(zip(unknown, sol))
    if mode.u4 == "delta_n":
        out["eta"] = fixed
    else:
        out["delta_n"] = fixed
    return out["delta_l"], out["delta_m"], out["delta_n"], out["eta"]


# composition ---------------------------------------------------------------

def flat_parametrization(t0, kappa, traj, choice, h_estimate=None, warm=None, params=None,
                         mode=None):
    """All states and controls as series at ``t0`` from the flat outputs.

    ``h_estimate`` supplies (p, q, r, delta_l, delta_m, delta_n) inside the
    force block (zeros when None). ``warm`` is a :class:`WarmStart` updated in
    place. Entries carry the staged orders of :func:`staged_order`.
    """
    if params is None:
        raise ConfigError("flat_parametrization needs aircraft parameters")
    if kappa < 4:
        raise ts.OrderError(f"kappa must be at least 4 to reach the controls, got {kappa}")
    mode = mode or ControlMode()
    stage = 1
    try:
        xs, ys, zs = traj.positions(t0, kappa)
        V, gamma, chi = stage1_invert(xs, ys, zs, None if warm is None else warm.chi)
        if warm is not None:
            warm.chi = chi.value
        stage = 2
        zeta = traj.series("zeta", t0, kappa - 2)
        alpha, beta, mu, F = stage2_solve(V, gamma, chi, zeta, choice, h_estimate, warm, params, t0=t0)
        stage = 3
        p, q, r = stage3_solve(alpha, beta, mu, V, gamma, chi, params, F=F, h_estimate=h_estimate)
        stage = 4
        dl, dm, dn, eta = stage4_solve(p, q, r, {"V": V, "alpha": alpha, "beta": beta, "F": F},
                                       params, mode, t0=t0)
    except (SingularityError, NewtonConvergenceError, ts.OrderError, ts.SeriesDomainError) as e:
        raise annotate(e, stage=stage)
    entries = dict(x=xs, y=ys, z=zs, V=V, gamma=gamma, chi=chi, alpha=alpha, beta=beta, mu=mu, F=F,
                   p=p, q=q, r=r, delta_l=dl, delta_m=dm, delta_n=dn, eta=eta)
    return SeriesVector(entries, base_time=float(t0))


def flight_point(sv, dt=0.0):
    """FlightPoint of the values of a series vector ``dt`` after its base time."""
    vals = {k: (v(dt) if isinstance(v, TaylorSeries) else float(v)) for k, v in sv.items()}
    return aero.FlightPoint.from_mapping(vals)


def series_point(sv):
    """FlightPoint whose fields are the series themselves."""
    return aero.FlightPoint.from_mapping(dict(sv.items()))
