"""Aircraft data model, GNA aerodynamic polynomials, forces/torques and dynamics.

State and control naming::

    positions   x, y, z          (m, z positive down)
    velocity    V, gamma, chi    (m/s, rad, rad)
    attitude    alpha, beta, mu  (rad)
    rates       p, q, r          (rad/s, body axes)
    controls    F, eta, delta_l, delta_m, delta_n

Every function here is written with the series-aware elementary functions
from :mod:`aeroflat.series`, so arguments may be floats or TaylorSeries.

Wind-axes kinematics used for the attitude block (the determinant of the map
(p, q, r) -> (alpha', beta', mu') is 1/cos(beta))::

    alpha' = q - tan(beta) (p cos(alpha) + r sin(alpha)) + Z / (m V cos(beta))
    beta'  = p sin(alpha) - r cos(alpha) + Y / (m V)
    mu'    = (p cos(alpha) + r sin(alpha)) / cos(beta) - tan(beta) Z / (m V)
             + chi' sin(gamma)
"""
from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import series as ts
from .errors import ChartError, ConfigError

REGRESSORS = ("alpha", "beta", "ptilde", "qtilde", "rtilde", "dl", "dm", "dn")
CHANNELS = ("C_D", "C_Y", "C_L", "C_l", "C_m", "C_n")

STATES = ("x", "y", "z", "V", "gamma", "chi", "alpha", "beta", "mu", "p", "q", "r")
CONTROLS = ("F", "eta", "delta_l", "delta_m", "delta_n")
H_NAMES = ("p", "q", "r", "delta_l", "delta_m", "delta_n")


def _mono(**kw):
    return tuple(kw.get(n, 0) for n in REGRESSORS)


# Monomial structure of each channel, in coefficient order. The force
# channels C_D, C_Y, C_L only involve the controls through delta_m (C_D, C_L)
# and delta_l, delta_n (C_Y); the torque channels are affine in the controls.
GNA_STRUCTURE = {
    "C_D": (
        _mono(), _mono(alpha=1), _mono(alpha=1, qtilde=1), _mono(alpha=1, dm=1),
        _mono(alpha=2), _mono(alpha=2, qtilde=1), _mono(dm=1), _mono(alpha=3),
        _mono(alpha=3, qtilde=1), _mono(alpha=4),
    ),
    "C_Y": (_mono(beta=1), _mono(ptilde=1), _mono(rtilde=1), _mono(dl=1), _mono(dn=1)),
    "C_L": (
        _mono(), _mono(alpha=1), _mono(qtilde=1), _mono(dm=1), _mono(alpha=1, qtilde=1),
        _mono(alpha=2), _mono(alpha=3), _mono(alpha=4),
    ),
    "C_l": (_mono(beta=1), _mono(ptilde=1), _mono(rtilde=1), _mono(dl=1), _mono(dn=1)),
    "C_m": (
        _mono(), _mono(alpha=1), _mono(qtilde=1), _mono(dm=1), _mono(alpha=1, qtilde=1),
        _mono(alpha=2, qtilde=1), _mono(alpha=2, dm=1), _mono(alpha=3, qtilde=1),
        _mono(alpha=3, dm=1), _mono(alpha=4),
    ),
    "C_n": (
        _mono(beta=1), _mono(ptilde=1), _mono(rtilde=1), _mono(dl=1), _mono(dn=1),
        _mono(beta=2), _mono(beta=3),
    ),
}
N_COEFFICIENTS = 45
_CONTROL_IDX = (5, 6, 7)


@dataclass(frozen=True)
class GnaTerm:
    theta: float
    exponents: tuple

    def __post_init__(self):
        if len(self.exponents) != len(REGRESSORS) or any(int(e) != e or e < 0 for e in self.exponents):
            raise ConfigError(f"bad exponent tuple {self.exponents!r}")


@dataclass(frozen=True)
class GnaCoefficients:
    """Term lists per channel: ``{"C_D": (GnaTerm, ...), ...}``."""

    channels: dict

    def __post_init__(self):
        if set(self.channels) != set(CHANNELS):
            raise ConfigError(f"GNA channels must be exactly {CHANNELS}, got {sorted(self.channels)}")
        n = sum(len(v) for v in self.channels.values())
        if n != N_COEFFICIENTS:
            raise ConfigError(f"GNA model needs {N_COEFFICIENTS} coefficients, got {n}")
        for ch in ("C_D", "C_Y", "C_L"):
            got = tuple(t.exponents for t in self.channels[ch])
            if sorted(got) != sorted(GNA_STRUCTURE[ch]):
                raise ConfigError(f"channel {ch} does not have the GNA monomial structure")
        for ch in ("C_l", "C_m", "C_n"):
            for t in self.channels[ch]:
                if sum(t.exponents[i] for i in _CONTROL_IDX) > 1:
                    raise ConfigError(f"channel {ch} must be affine in the control deflections")

    @classmethod
    def from_thetas(cls, thetas):
        """Build from ``{channel: sequence of theta}`` in :data:`GNA_STRUCTURE` order."""
        ch = {}
        for name in CHANNELS:
            vals = list(thetas[name])
            if len(vals) != len(GNA_STRUCTURE[name]):
                raise ConfigError(f"channel {name} expects {len(GNA_STRUCTURE[name])} values, got {len(vals)}")
            ch[name] = tuple(GnaTerm(float(v), e) for v, e in zip(vals, GNA_STRUCTURE[name]))
        return cls(ch)

    def theta(self, channel, **exps):
        """Coefficient of one monomial, 0 if absent."""
        key = _mono(**exps)
        return sum(t.theta for t in self.channels[channel] if t.exponents == key)

    def vector(self):
        return np.array([t.theta for c in CHANNELS for t in self.channels[c]])

    def scaled(self, factor):
        return GnaCoefficients({c: tuple(GnaTerm(t.theta * factor, t.exponents) for t in v)
                                for c, v in self.channels.items()})


@dataclass(frozen=True)
class AircraftParams:
    name: str
    m: float
    S: float
    a: float
    b: float
    Ixx: float
    Iyy: float
    Izz: float
    Ixz: float
    gna: GnaCoefficients
    eps: float = 0.0
    y_p: float = 0.0
    rho: float = 1.225
    g: float = 9.80665
    source: str = ""

    def __post_init__(self):
        for k in ("m", "S", "rho", "Ixx", "Iyy", "Izz"):
            if not getattr(self, k) > 0:
                raise ConfigError(f"aircraft parameter {k} must be positive")
        if not self.Ixx * self.Izz - self.Ixz ** 2 > 0:
            raise ConfigError("inertia matrix is not positive definite (Ixx*Izz <= Ixz**2)")

    @property
    def inertia(self):
        return np.array([[self.Ixx, 0.0, -self.Ixz], [0.0, self.Iyy, 0.0], [-self.Ixz, 0.0, self.Izz]])

    def inertia_solve(self, v):
        """I^{-1} v for a 3-vector of floats or series (closed form)."""
        d = self.Ixx * self.Izz - self.Ixz ** 2
        return (
            (self.Izz * v[0] + self.Ixz * v[2]) * (1.0 / d),
            v[1] * (1.0 / self.Iyy),
            (self.Ixz * v[0] + self.Ixx * v[2]) * (1.0 / d),
        )

    def replace(self, **kw):
        return replace(self, **kw)


@dataclass(frozen=True)
class FlightPoint:
    x: object = 0.0
    y: object = 0.0
    z: object = 0.0
    V: object = 0.0
    gamma: object = 0.0
    chi: object = 0.0
    alpha: object = 0.0
    beta: object = 0.0
    mu: object = 0.0
    p: object = 0.0
    q: object = 0.0
    r: object = 0.0
    F: object = 0.0
    eta: object = 0.0
    delta_l: object = 0.0
    delta_m: object = 0.0
    delta_n: object = 0.0

    @classmethod
    def from_mapping(cls, d):
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def replace(self, **kw):
        return replace(self, **kw)

    def constants(self):
        return FlightPoint(**{k: ts.const_term(v) for k, v in self.as_dict().items()})

    def state_vector(self):
        return np.array([ts.const_term(getattr(self, n)) for n in STATES])


@dataclass(frozen=True)
class ForcesMoments:
    X: object
    Y: object
    Z: object
    L: object
    M: object
    N: object


def gna_eval(coeffs, alpha, beta, p, q, r, delta_l, delta_m, delta_n, params, channels=CHANNELS):
    """Evaluate the GNA channels; returns a dict channel -> value."""
    reg = (alpha, beta, params.a * p, params.b * q, params.a * r, delta_l, delta_m, delta_n)
    cache = {}

    def pw(i, e):
        key = (i, e)
        if key not in cache:
            cache[key] = reg[i] if e == 1 else pw(i, e - 1) * reg[i]
        return cache[key]

    out = {}
    for ch in channels:
        acc = 0.0
        for term in coeffs.channels[ch]:
            if term.theta == 0.0:
                continue
            mono = term.theta
            for i, e in enumerate(term.exponents):
                if e:
                    mono = pw(i, e) * mono
            acc = acc + mono
        out[ch] = acc
    return out


def wind_frame_coeffs(C_D, C_L, alpha):
    """Rotate the axial/normal pair by alpha: (C_x, C_z)."""
    ca, sa = ts.cos(alpha), ts.sin(alpha)
    return ca * C_D + sa * C_L, ca * C_L - sa * C_D


def sideslip_rotation(C_x, C_y, beta):
    """Rotate (C_x, C_y) by beta about the normal axis, as the thrust is.

    Returns (drag-like, side) coefficients in wind axes: sideslip adds
    ``-C_y sin(beta)`` to the drag.
    """
    sb, cb = ts.sincos(beta)
    return cb * C_x - sb * C_y, cb * C_y + sb * C_x


def dynamic_pressure_area(params, V):
    return 0.5 * params.rho * params.S * (V * V)


def force_block(params, V, gamma, mu, alpha, beta, F, p=0.0, q=0.0, r=0.0,
                delta_l=0.0, delta_m=0.0, delta_n=0.0):
    """Wind-frame forces (X, Y, Z).

    Gravity enters Z with a plus sign (z down). The aerodynamic coefficients
    are rotated by alpha and then by beta, the same rotations that carry the
    thrust into wind axes.
    """
    c = gna_eval(params.gna, alpha, beta, p, q, r, delta_l, delta_m, delta_n, params,
                 channels=("C_D", "C_Y", "C_L"))
    Cxs, Cz = wind_frame_coeffs(c["C_D"], c["C_L"], alpha)
    Cx, Cy = sideslip_rotation(Cxs, c["C_Y"], beta)
    qs = dynamic_pressure_area(params, V)
    mg = params.m * params.g
    ae = alpha + params.eps
    cae, sae = ts.cos(ae), ts.sin(ae)
    cg = ts.cos(gamma)
    sm, cm = ts.sincos(mu)
    sb, cb = ts.sincos(beta)
    X = F * (cae * cb) - qs * Cx - mg * ts.sin(gamma)
    Y = -F * (cae * sb) + qs * Cy + mg * (cg * sm)
    Z = -F * sae - qs * Cz + mg * (cg * cm)
    return X, Y, Z


def torque_block(params, V, alpha, beta, p, q, r, F, eta, delta_l, delta_m, delta_n):
    c = gna_eval(params.gna, alpha, beta, p, q, r, delta_l, delta_m, delta_n, params,
                 channels=("C_l", "C_m", "C_n"))
    qs = dynamic_pressure_area(params, V)
    dF = eta * F
    L = -params.y_p * np.sin(params.eps) * dF + qs * (params.a * c["C_l"])
    M = qs * (params.b * c["C_m"])
    N = params.y_p * np.cos(params.eps) * dF + qs * (params.a * c["C_n"])
    return L, M, N


def forces_moments(pt, params, h=None):
    """Forces and torques at ``pt``; ``h`` optionally freezes (p, q, r, deltas)
    inside the force block only."""
    hv = _h_values(pt, h)
    X, Y, Z = force_block(params, pt.V, pt.gamma, pt.mu, pt.alpha, pt.beta, pt.F, *hv)
    L, M, N = torque_block(params, pt.V, pt.alpha, pt.beta, pt.p, pt.q, pt.r, pt.F, pt.eta,
                           pt.delta_l, pt.delta_m, pt.delta_n)
    return ForcesMoments(X, Y, Z, L, M, N)


def _h_values(pt, h):
    if h is None:
        return tuple(getattr(pt, n) for n in H_NAMES)
    if isinstance(h, dict) or hasattr(h, "get"):
        return tuple(h.get(n, 0.0) for n in H_NAMES)
    return tuple(h)


def _check_chart(gamma, beta, V):
    if abs(np.cos(ts.const_term(gamma))) < 1e-12:
        raise ChartError("cos(gamma) = 0: outside the Euler-angle chart")
    if abs(np.cos(ts.const_term(beta))) < 1e-12:
        raise ChartError("cos(beta) = 0: outside the attitude chart")
    if ts.const_term(V) == 0.0:
        raise ChartError("V = 0: velocity angles undefined")


def kinematics(V, gamma, chi):
    cg = ts.cos(gamma)
    sc, cc = ts.sincos(chi)
    return V * (cc * cg), V * (sc * cg), -V * ts.sin(gamma)


def velocity_rates(params, V, gamma, mu, X, Y, Z):
    m = params.m
    sm, cm = ts.sincos(mu)
    mV = m * V
    dV = X * (1.0 / m)
    dgamma = -(Y * sm + Z * cm) / mV
    dchi = (Y * cm - Z * sm) / (mV * ts.cos(gamma))
    return dV, dgamma, dchi


def attitude_rates(params, V, gamma, alpha, beta, p, q, r, Y, Z, dchi):
    sa, ca = ts.sincos(alpha)
    sb, cb = ts.sincos(beta)
    tb = sb / cb
    mV = params.m * V
    w = p * ca + r * sa
    dalpha = q - tb * w + Z / (mV * cb)
    dbeta = p * sa - r * ca + Y / mV
    dmu = w / cb - tb * Z / mV + dchi * ts.sin(gamma)
    return dalpha, dbeta, dmu


def rate_rhs(params, p, q, r, L, M, N):
    """Right-hand side of the Euler equations before applying I^{-1}."""
    Ixx, Iyy, Izz, Ixz = params.Ixx, params.Iyy, params.Izz, params.Ixz
    return (
        (Iyy - Izz) * (q * r) + Ixz * (p * q) + L,
        (Izz - Ixx) * (p * r) + Ixz * (r * r - p * p) + M,
        (Ixx - Iyy) * (p * q) - Ixz * (r * q) + N,
    )


def _dynamics(pt, params, h):
    _check_chart(pt.gamma, pt.beta, pt.V)
    fm = forces_moments(pt, params, h)
    dx, dy, dz = kinematics(pt.V, pt.gamma, pt.chi)
    dV, dgamma, dchi = velocity_rates(params, pt.V, pt.gamma, pt.mu, fm.X, fm.Y, fm.Z)
    dalpha, dbeta, dmu = attitude_rates(params, pt.V, pt.gamma, pt.alpha, pt.beta, pt.p, pt.q, pt.r,
                                        fm.Y, fm.Z, dchi)
    dp, dq, dr = params.inertia_solve(rate_rhs(params, pt.p, pt.q, pt.r, fm.L, fm.M, fm.N))
    return dict(zip(STATES, (dx, dy, dz, dV, dgamma, dchi, dalpha, dbeta, dmu, dp, dq, dr)))


def dynamics_full(pt, params):
    """Time derivatives of the 12 states, as a dict keyed by state name."""
    return _dynamics(pt, params, None)


def dynamics_simplified(pt, params, h_estimate=None):
    """As :func:`dynamics_full` but with (p, q, r, deltas) inside the force
    block replaced by ``h_estimate`` (zeros when None). The torque block
    always uses the actual values."""
    if h_estimate is None:
        h_estimate = {}
    return _dynamics(pt, params, h_estimate)


def state_array(d):
    return np.array([ts.const_term(d[n]) for n in STATES])
