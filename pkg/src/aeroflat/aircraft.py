"""Aircraft coefficient files: parsing, unit conversion and validation.

See ``docs/schema.md`` for the file layout. Rate terms (those with a
``ptilde``, ``qtilde`` or ``rtilde`` exponent) are stored in files as the usual
nondimensional derivatives with respect to ``rate * length / (2 * V_ref)``;
they are divided by ``2 * V_ref`` once here so the in-memory model can use
the regressors ``a*p``, ``b*q``, ``a*r`` directly.
"""
import math
from importlib import resources
from pathlib import Path

from . import yamlio
from .aero import CHANNELS, REGRESSORS, AircraftParams, GnaCoefficients, GnaTerm
from .errors import ConfigError

FT = 0.3048
KT = 1852.0 / 3600.0
LB = 0.45359237
SLUG = 14.593903

LENGTH = {"m": 1.0, "ft": FT}
MASS = {"kg": 1.0, "lb": LB, "slug": SLUG}
INERTIA = {"kg*m^2": 1.0, "slug*ft^2": SLUG * FT * FT}
ANGLE = {"rad": 1.0, "deg": math.pi / 180.0}
SPEED = {"m/s": 1.0, "kt": KT, "ft/s": FT, "km/h": 1.0 / 3.6}
DENSITY = {"kg/m^3": 1.0, "slug/ft^3": SLUG / FT ** 3}

TOP_KEYS = ("name", "source", "units", "mass", "inertia", "geometry", "environment",
            "rate_reference_speed", "gna")
UNIT_KEYS = {"length": LENGTH, "mass": MASS, "inertia": INERTIA, "angle": ANGLE,
             "speed": SPEED, "density": DENSITY}
RATE_REGRESSORS = ("ptilde", "qtilde", "rtilde")


def _unit(units, kind, src):
    name = units.get(kind, next(iter(UNIT_KEYS[kind])))
    table = UNIT_KEYS[kind]
    if name not in table:
        raise ConfigError(f"{yamlio.where(units, kind, src)}: unknown {kind} unit {name!r}; "
                          f"expected one of {sorted(table)}")
    return table[name]


def parse_aircraft(doc, source=None):
    """Build :class:`AircraftParams` from a parsed document (SI output)."""
    src = source
    yamlio.check_keys(doc, TOP_KEYS, ("name", "mass", "inertia", "geometry", "gna"), src, "aircraft file")
    units = doc.get("units", {})
    yamlio.check_keys(units, UNIT_KEYS, (), src, "units")
    Lu = _unit(units, "length", src)
    Mu = _unit(units, "mass", src)
    Iu = _unit(units, "inertia", src)
    Au = _unit(units, "angle", src)
    Su = _unit(units, "speed", src)
    Du = _unit(units, "density", src)

    mass = doc["mass"]
    if isinstance(mass, dict):
        raise ConfigError(f"{yamlio.where(doc, 'mass', src)}: mass must be a number")
    m = yamlio.number(doc, "mass", src, positive=True) * Mu

    inertia = doc["inertia"]
    yamlio.check_keys(inertia, ("Ixx", "Iyy", "Izz", "Ixz"), ("Ixx", "Iyy", "Izz"), src, "inertia")
    I = {k: yamlio.number(inertia, k, src, default=0.0 if k == "Ixz" else None) * Iu
         for k in ("Ixx", "Iyy", "Izz", "Ixz")}

    geo = doc["geometry"]
    yamlio.check_keys(geo, ("S", "a", "b", "y_p", "eps"), ("S", "a", "b"), src, "geometry")
    S = yamlio.number(geo, "S", src, positive=True) * Lu * Lu
    a = yamlio.number(geo, "a", src, positive=True) * Lu
    b = yamlio.number(geo, "b", src, positive=True) * Lu
    y_p = yamlio.number(geo, "y_p", src, default=0.0) * Lu
    eps = yamlio.number(geo, "eps", src, default=0.0) * Au

    env = doc.get("environment", {})
    yamlio.check_keys(env, ("rho", "g"), (), src, "environment")
    rho = yamlio.number(env, "rho", src, positive=True, default=1.225 / Du) * Du
    g = yamlio.number(env, "g", src, positive=True, default=9.80665)

    vref = None
    if "rate_reference_speed" in doc:
        vref = yamlio.number(doc, "rate_reference_speed", src, positive=True) * Su

    gna = doc["gna"]
    yamlio.check_keys(gna, CHANNELS, CHANNELS, src, "gna")
    channels = {}
    for ch in CHANNELS:
        terms = gna[ch]
        if not isinstance(terms, list):
            raise ConfigError(f"{yamlio.where(gna, ch, src)}: channel {ch} must be a list of terms")
        out = []
        for i, term in enumerate(terms):
            yamlio.check_keys(term, ("theta", "exponents"), ("theta",), src, f"{ch} term")
            theta = yamlio.number(term, "theta", src)
            exps = term.get("exponents", {}) or {}
            yamlio.check_keys(exps, REGRESSORS, (), src, f"{ch} exponents")
            e = []
            for r in REGRESSORS:
                v = exps.get(r, 0)
                if isinstance(v, bool) or not isinstance(v, int) or v < 0:
                    raise ConfigError(f"{yamlio.where(exps, r, src)}: exponent must be a non-negative integer")
                e.append(v)
            if any(e[REGRESSORS.index(r)] for r in RATE_REGRESSORS):
                if vref is None:
                    raise ConfigError(f"{yamlio.where(terms, i, src)}: rate term needs rate_reference_speed")
                theta /= 2.0 * vref
            out.append(GnaTerm(theta, tuple(e)))
        channels[ch] = tuple(out)
    try:
        coeffs = GnaCoefficients(channels)
        return AircraftParams(
            name=str(doc["name"]), m=m, S=S, a=a, b=b, Ixx=I["Ixx"], Iyy=I["Iyy"], Izz=I["Izz"],
            Ixz=I["Ixz"], gna=coeffs, eps=eps, y_p=y_p, rho=rho, g=g, source=str(doc.get("source", "")),
        )
    except ConfigError as e:
        raise ConfigError(f"{src or '<input>'}: {e}") from None


def bundled_aircraft():
    root = resources.files("aeroflat") / "data" / "aircraft"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def resolve_path(ref, base=None):
    """Find an aircraft file: an explicit path, relative to ``base``, or a bundled name."""
    p = Path(ref)
    candidates = [p]
    if base is not None and not p.is_absolute():
        candidates.append(Path(base) / p)
    for c in candidates:
        if c.is_file():
            return c
    bundled = resources.files("aeroflat") / "data" / "aircraft" / f"{p.stem}.yaml"
    if bundled.is_file():
        return Path(str(bundled))
    raise ConfigError(f"aircraft file {ref!r} not found (bundled: {', '.join(bundled_aircraft())})")


def load_aircraft(ref, base=None):
    path = resolve_path(ref, base)
    return parse_aircraft(yamlio.load_file(path), source=str(path))
