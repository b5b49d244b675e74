"""Plan-wide orchestration, blending of local series and RK4 simulation."""
import csv
import math
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import aero
from . import kernels
from . import track
from .errors import (
    AeroflatError,
    ConfigError,
    HorizonError,
    SimulationDivergence,
    annotate,
)
from .flatplan import QUANTITIES, ControlMode, FlatOutputChoice, WarmStart
from .genflat import IterationPlan, generalized_flat_parametrization
from .series import TaylorSeries

CONTROL_NAMES = aero.CONTROLS  # F, eta, delta_l, delta_m, delta_n


@dataclass
class TrajectoryPlan:
    """Local series at every grid time for every iteration.

    ``steps[i][j]`` is the SeriesVector of iteration ``j`` at ``times[i]``.
    """

    times: np.ndarray
    steps: list
    choice: FlatOutputChoice
    plan: IterationPlan
    mode: ControlMode = field(default_factory=ControlMode)
    traj: object = None
    v: object = None
    timings: dict = field(default_factory=dict)
    _coeffs: dict = field(default_factory=dict, repr=False)

    @property
    def J(self):
        return self.plan.J

    @property
    def n_steps(self):
        return len(self.times) - 1

    def step(self, i, j=None):
        return self.steps[i][self.J if j is None else j]

    def series(self, quantity, i, j):
        return self.steps[i][j][quantity]

    def table(self):
        """Flat mapping (quantity, i, j) -> TaylorSeries."""
        return {(q, i, j): sv[q] for i, row in enumerate(self.steps) for j, sv in enumerate(row)
                for q in QUANTITIES}

    def coefficient_block(self, j, names=QUANTITIES):
        """Array (n_steps+1, len(names), order+1) of zero-padded coefficients."""
        key = (j, tuple(names))
        if key not in self._coeffs:
            rows = [[self.steps[i][j][q].coeffs for q in names] for i in range(len(self.times))]
            width = max(len(c) for r in rows for c in r)
            out = np.zeros((len(rows), len(names), width))
            for i, r in enumerate(rows):
                for k, c in enumerate(r):
                    out[i, k, : len(c)] = c
            self._coeffs[key] = out
        return self._coeffs[key]

    def bracket(self, t):
        t0, tn = self.times[0], self.times[-1]
        tol = 1e-12 * max(1.0, abs(t0), abs(tn))
        if t < t0 - tol or t > tn + tol:
            raise HorizonError(f"t={t} outside the planned horizon [{t0}, {tn}]")
        i = int(np.searchsorted(self.times, t, side="right")) - 1
        return min(max(i, 0), len(self.times) - 1)

    def blend(self, j, t, names=QUANTITIES):
        """Blended values of ``names`` at ``t`` (vectorized :func:`blend_eval`)."""
        block = self.coefficient_block(j, names)
        i = self.bracket(t)
        if i == len(self.times) - 1:
            return kernels.horner2d(block[i], 0.0)
        ta, tb = self.times[i], self.times[i + 1]
        if t == ta:
            return kernels.horner2d(block[i], 0.0)
        sa = kernels.horner2d(block[i], t - ta)
        sb = kernels.horner2d(block[i + 1], t - tb)
        return ((tb - t) * sa + (t - ta) * sb) / (tb - ta)


def blend_eval(plan, quantity, j, t):
    """[(t_{i+1}-t) s_i(t-t_i) + (t-t_i) s_{i+1}(t-t_{i+1})] / (t_{i+1}-t_i)."""
    i = plan.bracket(t)
    si = plan.series(quantity, i, j)
    if i == len(plan.times) - 1 or t == plan.times[i]:
        return si(0.0)
    ta, tb = plan.times[i], plan.times[i + 1]
    sb = plan.series(quantity, i + 1, j)
    return ((tb - t) * si(t - ta) + (t - ta) * sb(t - tb)) / (tb - ta)


def _log(verbose, msg):
    if verbose:
        print(msg, file=sys.stderr, flush=True)


def motion_planning(t_begin, t_end, n_steps, traj, choice, plan, params, mode=None, v=None,
                    verbose=False):
    """Generalized flat parametrization on the uniform grid t_begin..t_end.

    The Newton seed and the heading branch of step i+1 are predicted from the
    j=0 series of step i evaluated one step ahead.
    """
    if n_steps < 1:
        raise ConfigError("n_steps must be at least 1")
    if not t_end > t_begin:
        raise ConfigError("t_end must exceed t_begin")
    mode = mode or ControlMode()
    times = np.linspace(float(t_begin), float(t_end), int(n_steps) + 1)
    h = times[1] - times[0]
    warm = WarmStart()
    steps = []
    start = time.perf_counter()
    for i, t in enumerate(times):
        try:
            row = generalized_flat_parametrization(float(t), traj, choice, plan, v=v, params=params,
                                                   mode=mode, warm=warm)
        except AeroflatError as e:
            raise annotate(e, step=i)
        steps.append(row)
        s0 = row[0]
        warm = WarmStart(np.array([s0[k](h) for k in ("alpha", "beta", "mu", "F")]), s0["chi"](h))
        _log(verbose, f"plan step {i}/{n_steps} t={t:g}")
    timings = {"planning_s": time.perf_counter() - start}
    return TrajectoryPlan(times, steps, choice, plan, mode, traj, v, timings)


# simulation ------------------------------------------------------------------

STATE_BOUNDS = {"V": (1e-3, 1e4), "gamma": (-1.5, 1.5), "alpha": (-1.5, 1.5), "beta": (-1.5, 1.5),
                "mu": (-10.0, 10.0)}


@dataclass
class SimulationResult:
    times: np.ndarray
    states: np.ndarray        # (N, 12)
    controls: np.ndarray      # (N, 5) applied, feedback corrections included
    integrals: np.ndarray     # (N, 4)
    planned_states: np.ndarray
    planned_controls: np.ndarray
    mode: str = "open_loop"
    j: int = 0
    model: str = "full"
    timings: dict = field(default_factory=dict)

    @property
    def errors(self):
        return self.states - self.planned_states

    def column(self, name):
        if name in aero.STATES:
            return self.states[:, aero.STATES.index(name)]
        if name in CONTROL_NAMES:
            return self.controls[:, CONTROL_NAMES.index(name)]
        if name in ("I1", "I2", "I3", "I4"):
            return self.integrals[:, int(name[1]) - 1]
        raise KeyError(name)

    def header(self):
        return (["t"] + list(aero.STATES) + list(CONTROL_NAMES) + ["I1", "I2", "I3", "I4"]
                + [f"plan_{n}" for n in aero.STATES] + [f"plan_{n}" for n in CONTROL_NAMES]
                + [f"err_{n}" for n in aero.STATES])

    def rows(self):
        data = np.hstack([self.times[:, None], self.states, self.controls, self.integrals,
                          self.planned_states, self.planned_controls, self.errors])
        return data

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.header())
            for row in self.rows():
                w.writerow([repr(float(v)) for v in row])


def _zeta_error(choice, dx, t):
    if choice.kind == "beta":
        return dx[7]
    if choice.kind == "mu":
        return dx[8]
    if choice.kind == "combo":
        w1, w2 = choice.weights(t, 0)
        return w1.value * dx[7] + w2.value * dx[8]
    return 0.0


def _rk4(f, t, y, h):
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _check_state(y, t):
    if not np.all(np.isfinite(y)):
        raise SimulationDivergence(f"non-finite state at t={t:g}", last_time=t)
    for name, (lo, hi) in STATE_BOUNDS.items():
        v = y[aero.STATES.index(name)]
        if not lo < v < hi:
            raise SimulationDivergence(f"{name}={v:g} outside sanity bounds ({lo}, {hi}) at t={t:g}",
                                       last_time=t)


def simulate(plan, params, mode="open_loop", law=None, j=None, substeps=20, perturbation=None,
             model="full", t_end=None, verbose=False):
    """Integrate the model under the planned controls of iteration ``j``.

    ``mode="feedback"`` adds the corrections of ``law`` computed from the
    deviation to the same iteration's planned states and the integral states.
    ``model="simplified"`` integrates the model the plan of iteration ``j``
    was inverted from (force block fed by iteration j-1, or by ``plan.v``).
    ``perturbation`` maps state names to offsets added at t0.
    """
    if mode not in ("open_loop", "feedback"):
        raise ConfigError(f"simulation mode must be open_loop or feedback, got {mode!r}")
    if mode == "feedback" and law is None:
        raise ConfigError("feedback simulation needs a FeedbackLaw")
    if model not in ("full", "simplified"):
        raise ConfigError("model must be 'full' or 'simplified'")
    if substeps < 1:
        raise ConfigError("substeps must be at least 1")
    j = plan.J if j is None else int(j)
    times = plan.times
    t_stop = times[-1] if t_end is None else float(t_end)
    plan.bracket(t_stop)
    names = aero.STATES + CONTROL_NAMES
    ns = len(aero.STATES)
    u4_idx = CONTROL_NAMES.index("delta_n" if plan.mode.u4 == "delta_n" else "eta")
    choice = plan.choice

    h_names = aero.H_NAMES
    if model == "simplified" and j > 0:
        def h_of(t):
            return dict(zip(h_names, plan.blend(j - 1, t, h_names)))
    elif model == "simplified":
        v = plan.v
        if isinstance(v, aero.FlightPoint):
            v = {k: getattr(v, k) for k in h_names}
        const = {k: float(v.get(k, 0.0)) if v else 0.0 for k in h_names}

        def h_of(t):
            return const
    else:
        def h_of(t):
            return None

    gain_K = {"K": None}

    def controls_at(t, y):
        ref = plan.blend(j, t, names)
        u = ref[ns:].copy()
        if mode == "feedback":
            e = np.empty(track.N_AUG)
            e[:4] = y[ns:]
            e[4:] = y[:ns] - ref[:ns]
            corr = gain_K["K"] @ e
            u[0] += corr[0]
            u[2] += corr[1]
            u[3] += corr[2]
            u[u4_idx] += corr[3]
        return ref, u

    def rhs(t, y):
        ref, u = controls_at(t, y)
        vals = dict(zip(aero.STATES, y[:ns]))
        vals.update(zip(CONTROL_NAMES, u))
        pt = aero.FlightPoint(**vals)
        d = aero._dynamics(pt, params, h_of(t))
        dy = np.empty_like(y)
        dy[:ns] = [d[k] for k in aero.STATES]
        if mode == "feedback":
            dx = y[:ns] - ref[:ns]
            dy[ns:] = track.integral_rates(ref[5], dx[:3], _zeta_error(choice, dx, t))
        return dy

    y = plan.blend(j, times[0], aero.STATES).astype(float)
    for k, dv in (perturbation or {}).items():
        if k not in aero.STATES:
            raise ConfigError(f"unknown state {k!r} in perturbation")
        y[aero.STATES.index(k)] += float(dv)
    if mode == "feedback":
        y = np.concatenate([y, np.zeros(4)])

    out_t, out_y, out_u, out_ref = [], [], [], []

    def record(t, y):
        if mode == "feedback":
            gain_K["K"] = law.gain(t)
        ref, u = controls_at(t, y)
        out_t.append(t)
        out_y.append(y.copy())
        out_u.append(u)
        out_ref.append(ref)

    start = time.perf_counter()
    t = float(times[0])
    record(t, y)
    last_second = math.floor(t)
    i = 0
    while i < len(times) - 1 and times[i] < t_stop - 1e-12 * max(1.0, abs(t_stop)):
        ta, tb = times[i], min(times[i + 1], t_stop)
        n_sub = substeps if tb == times[i + 1] else max(1, int(math.ceil(substeps * (tb - ta) / (times[i + 1] - ta))))
        dt = (tb - ta) / n_sub
        if mode == "feedback":
            gain_K["K"] = law.gain(ta)
        for k in range(n_sub):
            t0 = ta + k * dt
            y = _rk4(rhs, t0, y, dt)
            t = ta + (k + 1) * dt if k + 1 < n_sub else tb
            _check_state(y, t)
            record(t, y)
            if mode == "feedback":
                gain_K["K"] = law.gain(ta)
        if math.floor(t) > last_second:
            last_second = math.floor(t)
            _log(verbose, f"simulate {mode} t={t:g}")
        i += 1

    Y = np.array(out_y)
    U = np.array(out_u)
    R = np.array(out_ref)
    integ = Y[:, ns:] if mode == "feedback" else np.zeros((len(Y), 4))
    return SimulationResult(np.array(out_t), Y[:, :ns], U, integ, R[:, :ns], R[:, ns:], mode=mode, j=j,
                            model=model, timings={"simulation_s": time.perf_counter() - start})


def tracking_metrics(result, plan, j=None, window=None, quantities=aero.STATES):
    """Max and RMS deviation of the simulated states from iteration ``j``
    over the trailing ``window`` seconds (the whole run when None)."""
    j = plan.J if j is None else j
    t = result.times
    t_hi = t[-1]
    t_lo = t[0] if window is None else max(t[0], t_hi - float(window))
    mask = t >= t_lo - 1e-12
    idx = [aero.STATES.index(q) for q in quantities]
    ref = np.array([plan.blend(j, tk, aero.STATES) for tk in t[mask]])
    err = result.states[mask][:, idx] - ref[:, idx]
    out = {}
    for k, q in enumerate(quantities):
        e = err[:, k]
        out[q] = {"max": float(np.max(np.abs(e))), "rms": float(np.sqrt(np.mean(e * e)))}
    out["_window"] = (float(t_lo), float(t_hi))
    return out


def position_error(result, plan, j=None):
    """Largest Euclidean position deviation from iteration ``j`` over the run."""
    j = plan.J if j is None else j
    ref = np.array([plan.blend(j, tk, ("x", "y", "z")) for tk in result.times])
    return float(np.max(np.linalg.norm(result.states[:, :3] - ref, axis=1)))
