"""Trim (calibration) solving and the generalized-flatness iteration.

The generalized iteration re-runs the flat parametrization with the neglected
force-block arguments (p, q, r and the deflections) taken from the previous
iterate, losing ``L`` orders each time, so that the controls of the last
iterate still carry order ``e``.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from . import aero
from . import series as ts
from .errors import (
    ConfigError,
    NewtonConvergenceError,
    SingularityError,
    TrimInfeasibleError,
    annotate,
)
from .flatplan import (
    ControlMode,
    FlatOutputChoice,
    WarmStart,
    flat_parametrization,
    series_point,
)
from .series import SeriesVector, TaylorSeries

TRIM_UNKNOWNS = ("V", "gamma", "chi_dot", "F", "alpha", "beta", "mu", "p", "q", "r",
                 "delta_l", "delta_m", "delta_n")


@dataclass
class TrimProblem:
    """Straight or steadily turning flight with constant controls.

    ``fixed`` holds exactly four of :data:`TRIM_UNKNOWNS`. ``eta`` is the
    differential-thrust parameter (held fixed, not counted among the four).

    ``model="full"`` solves the nine equations (velocity, attitude and rate
    dynamics) for the nine remaining unknowns. ``model="simplified"`` uses
    the force block with p, q, r and deflections frozen at zero; the
    deflections are then those frozen zeros and only the six velocity and
    attitude equations are solved.
    """

    fixed: dict
    guesses: dict = field(default_factory=dict)
    eta: float = 0.0
    model: str = "full"

    def __post_init__(self):
        fixed = dict(self.fixed)
        if "eta" in fixed:
            self.eta = float(fixed.pop("eta"))
        bad = [k for k in fixed if k not in TRIM_UNKNOWNS]
        if bad:
            raise ConfigError(f"unknown trim quantities {bad}; allowed {TRIM_UNKNOWNS}")
        if len(fixed) != 4:
            raise ConfigError(f"a trim problem fixes exactly 4 quantities, got {len(fixed)}: {sorted(fixed)}")
        if self.model not in ("full", "simplified"):
            raise ConfigError("model must be 'full' or 'simplified'")
        if self.model == "simplified" and any(k.startswith("delta_") for k in fixed):
            raise ConfigError("the simplified trim freezes the deflections at zero; they cannot be fixed")
        self.fixed = fixed

    @property
    def unknowns(self):
        if self.model == "full":
            return TRIM_UNKNOWNS
        return tuple(k for k in TRIM_UNKNOWNS if not k.startswith("delta_"))

    @property
    def free(self):
        return tuple(k for k in self.unknowns if k not in self.fixed)


def _trim_point(values, eta):
    d = {k: v for k, v in values.items() if k != "chi_dot"}
    d["eta"] = eta
    return aero.FlightPoint.from_mapping(d)


def _trim_residual(problem, params):
    free = problem.free
    g = params.g
    h = None if problem.model == "full" else {}

    def res(u):
        vals = dict(problem.fixed)
        vals.update(zip(free, u))
        pt = _trim_point(vals, problem.eta)
        d = aero._dynamics(pt, params, h)
        out = [d["V"] * (1.0 / g), d["gamma"], d["chi"] - vals["chi_dot"], d["alpha"], d["beta"], d["mu"]]
        if problem.model == "full":
            out += [d["p"], d["q"], d["r"]]
        return out
    return res


def _default_guesses(problem, params):
    V0 = math.sqrt(2.0 * params.m * params.g / (params.rho * params.S * 0.5))
    base = dict(V=V0, gamma=0.0, chi_dot=0.0, F=0.05 * params.m * params.g, alpha=0.1, beta=0.0, mu=0.0,
                p=0.0, q=0.0, r=0.0, delta_l=0.0, delta_m=0.0, delta_n=0.0)
    b = problem.fixed.get("beta", 0.0)
    seeds = [base]
    if b != 0.0:
        seeds.append(dict(base, mu=b))
        seeds.append(dict(base, mu=-b))
    seeds.append(dict(base, alpha=0.2, gamma=-0.1))
    out = []
    for s in seeds:
        s = dict(s)
        s.update(problem.guesses)
        out.append(np.array([s[k] for k in problem.free]))
    return out


def calibrate(problem, params, tol=1e-10, max_iter=40):
    """Solve the trim equations; returns a constant :class:`FlightPoint`.
    The turn rate is available from :func:`trim_values`."""
    vals = trim_values(problem, params, tol=tol, max_iter=max_iter)
    return _trim_point(vals, problem.eta)


def trim_values(problem, params, tol=1e-10, max_iter=40):
    """As :func:`calibrate` but returns a dict including ``chi_dot``."""
    res = _trim_residual(problem, params)

    def f(u):
        return np.array([ts.const_term(r) for r in res(list(u))])

    def jac(u):
        return ts.jacobian(res, u)

    last = None
    for seed in _default_guesses(problem, params):
        try:
            u, info = ts.newton_point(f, seed, tol=tol, max_iter=max_iter, jac=jac, on_fail="raise",
                                      full_output=True)
        except (NewtonConvergenceError, SingularityError, ArithmeticError, ValueError) as e:
            last = e
            continue
        vals = dict(delta_l=0.0, delta_m=0.0, delta_n=0.0)
        vals.update(problem.fixed)
        vals.update(zip(problem.free, (float(v) for v in u)))
        if vals["V"] > 0 and abs(vals["gamma"]) < math.pi / 2 and abs(vals["alpha"]) < 1.0:
            return vals
    x = getattr(last, "x", None)
    raise TrimInfeasibleError(f"trim problem with fixed {problem.fixed} has no solution from the default guesses"
                              f" ({last})", x=x, residual_norm=getattr(last, "residual_norm", None))


@dataclass(frozen=True)
class IterationPlan:
    J: int = 4
    e: int = 1
    L: int = 2
    r: int = 4

    def __post_init__(self):
        if self.J < 0 or self.e < 1 or self.L < 0 or self.r < 1:
            raise ConfigError("iteration plan needs J >= 0, e >= 1, L >= 0, r >= 1")
        if self.kappa0 > ts.MAX_ORDER:
            raise ConfigError(f"kappa0 = {self.kappa0} exceeds the series order limit {ts.MAX_ORDER}")

    @property
    def kappa0(self):
        return self.e + self.r + self.J * self.L

    def kappa(self, j):
        return self.kappa0 - j * self.L


H_KEYS = aero.H_NAMES


def h_from(sv):
    """The force-block estimate carried from one iterate to the next."""
    if sv is None:
        return None
    return {k: sv[k] for k in H_KEYS if k in sv}


def generalized_flat_parametrization(t0, traj, choice, plan, v=None, params=None, mode=None, warm=None):
    """Iterates j = 0..J of the generalized flat parametrization at ``t0``.

    ``v`` is the initial estimate of (p, q, r, deltas) (zeros when None; a
    FlightPoint or mapping of constants is accepted). Returns the list of
    SeriesVectors; iterate ``j`` is computed at order ``plan.kappa(j)``.
    """
    if params is None:
        raise ConfigError("generalized_flat_parametrization needs aircraft parameters")
    if isinstance(v, aero.FlightPoint):
        v = {k: getattr(v, k) for k in H_KEYS}
    warm = warm if warm is not None else WarmStart()
    h = v
    out = []
    for j in range(plan.J + 1):
        try:
            sv = flat_parametrization(t0, plan.kappa(j), traj, choice, h, warm, params, mode)
        except (SingularityError, NewtonConvergenceError, ArithmeticError, ValueError) as e:
            raise annotate(e, iteration=j)
        out.append(sv)
        h = h_from(sv)
    return out


def full_model_residual(sv, params, upto=0):
    """Coefficients 0..upto of (state' - f_full(state, controls)) for each state."""
    pt = series_point(sv)
    d = aero.dynamics_full(pt, params)
    out = {}
    for k in aero.STATES:
        lhs = sv[k].deriv()
        n = min(upto, lhs.order, d[k].order if isinstance(d[k], TaylorSeries) else upto)
        rhs = d[k].coeffs[: n + 1] if isinstance(d[k], TaylorSeries) else np.array([d[k]])
        out[k] = lhs.coeffs[: n + 1] - rhs
    return out


def simplified_model_residual(sv, params, h_estimate=None):
    """Per-state residual coefficients of the simplified model through the
    staged order of each equation."""
    pt = series_point(sv)
    d = aero.dynamics_simplified(pt, params, h_estimate)
    out = {}
    for k in aero.STATES:
        lhs = sv[k].deriv()
        rhs = d[k]
        n = min(lhs.order, rhs.order)
        out[k] = lhs.coeffs[: n + 1] - rhs.coeffs[: n + 1]
    return out


def residual_norm(res, params, V=None):
    """Dimensionless max-norm: V' scaled by g, angle rates as they are."""
    worst = 0.0
    for k, c in res.items():
        s = 1.0 / params.g if k == "V" else 1.0
        if k in ("x", "y", "z"):
            s = 1.0 / (V if V else 1.0)
        worst = max(worst, float(np.max(np.abs(c))) * s)
    return worst
