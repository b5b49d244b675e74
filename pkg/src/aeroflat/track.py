"""Linearization along a plan and integral-augmented pole placement.

The error state is ``[I1, I2, I3, I4, x, y, z, V, gamma, chi, alpha, beta, mu,
p, q, r]`` (deviations from the plan, integrals of the heading-aligned
position errors, altitude error and zeta error). Corrections are
``[dF, d_delta_l, d_delta_m, d_u4]`` where u4 is the rudder or the
differential thrust depending on the control mode.

Gains come from input/output linearization of the frozen-time linear model,
one output chain at a time: the thrust correction places the roots of the
along-track chain (I1, order 3); then the three deflection corrections
decouple and place the cross-track (I2), altitude (I3) and zeta (I4) chains.
With thrust as flat output, only I1, I2, I3 are used, each of order 5, and
the thrust is not corrected. Every chain p gets the characteristic
polynomial prod_k (s + lambda_pk).
"""
import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import aero
from . import series as ts
from .errors import ConfigError, FeedbackDesignError, HorizonError
from .flatplan import ControlMode, FlatOutputChoice

AUG_STATES = ("I1", "I2", "I3", "I4") + aero.STATES
INPUTS = ("F", "delta_l", "delta_m", "u4")
N_AUG = len(AUG_STATES)


def chain_orders(choice):
    kind = choice.kind if isinstance(choice, FlatOutputChoice) else choice
    return (5, 5, 5) if kind == "thrust" else (3, 5, 5, 3)


@dataclass(frozen=True)
class PoleConfig:
    """Decay rates per integral chain; lengths must match :func:`chain_orders`."""

    lambdas: tuple

    def __post_init__(self):
        lam = tuple(tuple(float(v) for v in row) for row in self.lambdas)
        object.__setattr__(self, "lambdas", lam)
        for row in lam:
            if any(not v > 0 for v in row):
                raise ConfigError(f"pole decay rates must be positive, got {row}")

    @classmethod
    def uniform(cls, value, choice):
        return cls(tuple((value,) * n for n in chain_orders(choice)))

    def check(self, choice):
        want = chain_orders(choice)
        got = tuple(len(r) for r in self.lambdas)
        if got != want:
            raise ConfigError(f"pole lists for flat output '{getattr(choice, 'kind', choice)}' must have "
                              f"lengths {want}, got {got}")

    @staticmethod
    def polynomial(lams):
        """Monic coefficients (highest first) of prod (s + lambda)."""
        return np.poly([-v for v in lams])


@dataclass
class LinearSystem:
    A: np.ndarray
    B: np.ndarray
    t: float = 0.0
    states: tuple = AUG_STATES
    inputs: tuple = INPUTS


def _zeta_row(choice, t=0.0):
    row = np.zeros(N_AUG)
    k = AUG_STATES.index
    if choice.kind == "beta":
        row[k("beta")] = 1.0
    elif choice.kind == "mu":
        row[k("mu")] = 1.0
    elif choice.kind == "combo":
        w = choice.weights(t, 0)
        row[k("beta")] = w[0].value
        row[k("mu")] = w[1].value
    return row


def linearize(planned, params, choice=None, mode=None, model="simplified", dt=0.0):
    """Frozen-time linear model of the error dynamics at a planned point.

    ``planned`` is a SeriesVector (evaluated ``dt`` after its base time) or a
    constant FlightPoint. With ``model="simplified"`` the force block keeps
    (p, q, r, deflections) at their planned values; ``"full"`` differentiates
    through them as well.
    """
    choice = choice or FlatOutputChoice("beta")
    mode = mode or ControlMode()
    if isinstance(planned, aero.FlightPoint):
        pt = planned.constants()
        t = 0.0
    else:
        vals = {k: (v(dt) if isinstance(v, ts.TaylorSeries) else float(v)) for k, v in planned.items()}
        pt = aero.FlightPoint.from_mapping(vals)
        t = planned.base_time + dt
    u4_name = "delta_n" if mode.u4 == "delta_n" else "eta"
    names = aero.STATES + ("F", "delta_l", "delta_m", u4_name)
    x0 = np.array([getattr(pt, n) for n in names], dtype=float)
    h = {n: getattr(pt, n) for n in aero.H_NAMES} if model == "simplified" else None

    def f(u):
        p = pt.replace(**dict(zip(names, u)))
        d = aero._dynamics(p, params, h)
        return [d[n] for n in aero.STATES]

    Jac = ts.jacobian(f, x0)
    n = len(aero.STATES)
    A = np.zeros((N_AUG, N_AUG))
    B = np.zeros((N_AUG, len(INPUTS)))
    A[4:, 4:] = Jac[:, :n]
    B[4:, :] = Jac[:, n:]
    k = AUG_STATES.index
    c, s = math.cos(pt.chi), math.sin(pt.chi)
    A[0, k("x")], A[0, k("y")] = c, s
    A[1, k("x")], A[1, k("y")] = -s, c
    A[2, k("z")] = 1.0
    if choice.kind != "thrust":
        A[3] = _zeta_row(choice, t)
    return LinearSystem(A, B, t=t)


def _place(A, B_in, outputs, orders, lams, tol=1e-9):
    """Gain K (len(inputs) x n) placing each output chain's roots."""
    rows_D, rows_N = [], []
    for idx, (c, r, lam) in enumerate(zip(outputs, orders, lams)):
        powers = [c]
        for _ in range(r):
            powers.append(powers[-1] @ A)
        scale = max(1.0, max(np.max(np.abs(pk)) for pk in powers))
        for k in range(r - 1):
            lead = powers[k] @ B_in
            if np.max(np.abs(lead)) > tol * scale * max(1.0, np.max(np.abs(B_in))):
                raise FeedbackDesignError(f"chain {idx + 1}: input enters before order {r} "
                                          f"(derivative {k + 1}); chain structure is not triangular")
        rows_D.append(powers[r - 1] @ B_in)
        a = PoleConfig.polynomial(lam)[::-1]  # a[0] + a[1] s + ... + s^r
        N = powers[r].copy()
        for k in range(r):
            N = N + a[k] * powers[k]
        rows_N.append(N)
    D = np.array(rows_D)
    if D.shape[0] != D.shape[1]:
        raise FeedbackDesignError("decoupling matrix is not square")
    cond = np.linalg.cond(D)
    if not np.isfinite(cond) or cond > 1e12:
        s = np.linalg.svd(D, compute_uv=False)
        weak = int(np.argmin(np.abs(D).sum(axis=1))) + 1
        raise FeedbackDesignError(f"decoupling matrix singular (singular values {s}); chain {weak} uncontrollable")
    return -np.linalg.solve(D, np.array(rows_N))


@dataclass
class StepGain:
    t: float
    K: np.ndarray  # 4 x 16, rows INPUTS, columns AUG_STATES


def design_feedback(lin, poles, choice, tol=1e-9):
    """Gain matrix for one planning step; returns :class:`StepGain`."""
    poles.check(choice)
    A, B = lin.A, lin.B
    e = np.eye(N_AUG)
    K = np.zeros((len(INPUTS), N_AUG))
    if choice.kind == "thrust":
        outs = [e[0], e[1], e[2]]
        K[1:] = _place(A, B[:, 1:], outs, (5, 5, 5), poles.lambdas, tol)
        return StepGain(lin.t, K)
    KA = _place(A, B[:, :1], [e[0]], (3,), poles.lambdas[:1], tol)
    A1 = A + B[:, :1] @ KA
    # the deflection inputs must not reach the along-track chain below order 3
    p = e[0]
    for k in range(3):
        lead = p @ B[:, 1:]
        if np.max(np.abs(lead)) > tol * max(1.0, np.max(np.abs(p))) * max(1.0, np.max(np.abs(B))):
            raise FeedbackDesignError("chain 1: deflections enter the along-track chain; "
                                      "use the simplified linearization")
        p = p @ A
    KB = _place(A1, B[:, 1:], [e[1], e[2], e[3]], (5, 5, 3), poles.lambdas[1:], tol)
    K[0] = KA[0]
    K[1:] = KB
    return StepGain(lin.t, K)


def closed_loop(lin, gain):
    return lin.A + lin.B @ gain.K


def chain_restrictions(lin, gain, choice):
    """Closed loop restricted to each output chain.

    The rows ``c, cA, ..., cA^{r-1}`` span an invariant subspace; in that basis
    the restriction is the companion matrix of the placed polynomial.
    """
    Acl = closed_loop(lin, gain)
    e = np.eye(N_AUG)
    outs = [e[0], e[1], e[2]] if choice.kind == "thrust" else [e[0], e[1], e[2], e[3]]
    out = []
    for c, r in zip(outs, chain_orders(choice)):
        T = [c]
        for _ in range(r - 1):
            T.append(T[-1] @ Acl)
        T = np.array(T)
        out.append(np.linalg.lstsq(T.T, (T @ Acl).T, rcond=None)[0].T)
    return out


def multiple_eigenvalues(M, cluster_tol=1e-2, deflation_tol=1e-8):
    """Eigenvalues of ``M`` with clustered ones resolved as multiple roots.

    A k-fold eigenvalue is perturbed by ~eps**(1/k) in floating point, so
    plain ``eigvals`` scatters it. Eigenvalues chained by gaps below
    ``cluster_tol`` (relative) are grouped; a group of size k is refined as
    the simple root z of the (k-1)-th derivative of the characteristic
    polynomial and kept only if (s - z)^k divides that polynomial.
    """
    raw = np.linalg.eigvals(M)
    poly = np.poly(M)
    pnorm = np.max(np.abs(poly))
    left = list(raw)
    groups = []
    while left:
        grp = [left.pop(0)]
        grown = True
        while grown:
            grown = False
            for w in list(left):
                if any(abs(w - g) <= cluster_tol * max(1.0, abs(g)) for g in grp):
                    grp.append(w)
                    left.remove(w)
                    grown = True
        groups.append(grp)
    out = []
    for grp in groups:
        k = len(grp)
        if k == 1:
            out.extend(grp)
            continue
        z = complex(np.mean(grp))
        d = np.polyder(poly, k - 1)
        dd = np.polyder(d)
        for _ in range(30):
            den = np.polyval(dd, z)
            if den == 0:
                break
            step = np.polyval(d, z) / den
            z -= step
            if abs(step) <= 1e-15 * max(1.0, abs(z)):
                break
        if abs(z.imag) <= 1e-12 * max(1.0, abs(z)):
            z = complex(z.real, 0.0)
        _, rem = np.polydiv(poly, np.poly([z] * k))
        if np.max(np.abs(rem), initial=0.0) <= deflation_tol * pnorm:
            out.extend([z] * k)
        else:
            out.extend(grp)
    return np.array(out)


def chain_eigenvalues(lin, gain, choice, resolve_multiple=True):
    """Per-chain closed-loop eigenvalues (see :func:`multiple_eigenvalues`)."""
    Ms = chain_restrictions(lin, gain, choice)
    if resolve_multiple:
        return [multiple_eigenvalues(M) for M in Ms]
    return [np.linalg.eigvals(M) for M in Ms]


def spectral_error(eigs, lams):
    """Worst relative deviation of ``eigs`` from ``-lams`` (sorted matching)."""
    target = np.sort(-np.asarray(lams, dtype=float))
    got = np.array(sorted(eigs, key=lambda z: (z.real, z.imag)))
    return float(np.max(np.abs(got - target) / np.abs(target)))


def spectral_check(lin, gain, choice, poles, rtol=1e-6):
    """(ok, worst relative error, worst error of the unresolved eigenvalues)."""
    worst = worst_raw = 0.0
    for M, lam in zip(chain_restrictions(lin, gain, choice), poles.lambdas):
        worst = max(worst, spectral_error(multiple_eigenvalues(M), lam))
        worst_raw = max(worst_raw, spectral_error(np.linalg.eigvals(M), lam))
    return worst <= rtol, worst, worst_raw


@dataclass
class FeedbackLaw:
    """Per-step gains held constant over each planning interval."""

    times: np.ndarray
    gains: list
    choice: FlatOutputChoice
    poles: PoleConfig
    mode: ControlMode = field(default_factory=ControlMode)

    def step_index(self, t):
        t0, tn = self.times[0], self.times[-1]
        span = max(1.0, abs(tn - t0))
        if t < t0 - 1e-9 * span or t > tn + 1e-9 * span:
            raise HorizonError(f"t={t} outside the feedback horizon [{t0}, {tn}]")
        i = int(np.searchsorted(self.times, t, side="right")) - 1
        return min(max(i, 0), len(self.times) - 1)

    def gain(self, t):
        return self.gains[self.step_index(t)].K

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "t", "input"] + list(AUG_STATES))
            for i, g in enumerate(self.gains):
                for r, name in enumerate(INPUTS):
                    w.writerow([i, repr(float(g.t)), name] + [repr(float(v)) for v in g.K[r]])


@dataclass
class ErrorState:
    """Deviations from the plan (measured - planned) and the four integrals."""

    deltas: dict = field(default_factory=dict)
    integrals: tuple = (0.0, 0.0, 0.0, 0.0)

    def vector(self):
        v = np.zeros(N_AUG)
        v[:4] = self.integrals
        for i, n in enumerate(aero.STATES):
            v[4 + i] = self.deltas.get(n, 0.0)
        return v

    def scaled(self, a):
        return ErrorState({k: a * v for k, v in self.deltas.items()}, tuple(a * v for v in self.integrals))


def feedback_eval(law, err, t):
    """Corrections (dF, d_delta_l, d_delta_m, d_u4) at time ``t``."""
    e = err.vector() if isinstance(err, ErrorState) else np.asarray(err, dtype=float)
    return law.gain(t) @ e


def integral_rates(chi_planned, deltas, zeta_error=0.0):
    """Integrands of I1..I4 given planned heading and state deviations."""
    c, s = math.cos(chi_planned), math.sin(chi_planned)
    dx, dy, dz = deltas
    return (c * dx + s * dy, -s * dx + c * dy, dz, zeta_error)


def design_law(plan, params, poles, j=None, model="simplified"):
    """Feedback law over every step of a :class:`~aeroflat.sim.TrajectoryPlan`."""
    choice, mode = plan.choice, plan.mode
    poles.check(choice)
    j = plan.J if j is None else j
    gains = []
    for i, t in enumerate(plan.times):
        lin = linearize(plan.step(i, j), params, choice, mode, model=model)
        try:
            gains.append(design_feedback(lin, poles, choice))
        except FeedbackDesignError as e:
            raise FeedbackDesignError(f"{e} [step={i}, t={t:g}]") from None
    return FeedbackLaw(np.array(plan.times, dtype=float), gains, choice, poles, mode)
