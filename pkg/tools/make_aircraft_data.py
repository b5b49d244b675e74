"""Regenerate the bundled aircraft files from generic estimates.

The lift/drag polars below are textbook-shaped estimates, not identified
data. They are converted to body axial/normal coefficients (the rotation used
by the model maps these back to wind-axis drag/lift) and least-squares fitted
to the quartic-in-alpha structure of the GNA force channels.

    python3 tools/make_aircraft_data.py
"""
from pathlib import Path

import numpy as np
import yaml

OUT = Path(__file__).resolve().parents[1] / "src" / "aeroflat" / "data" / "aircraft"

AIRCRAFT = {
    "gtm": dict(
        name="GTM",
        source=("Generic estimates for a 5.5% dynamically scaled twin-jet transport model. "
                "Geometry and mass are typical published values; aerodynamic coefficients are "
                "textbook-shaped estimates, not an identified model."),
        units={"length": "ft", "mass": "lb", "inertia": "slug*ft^2", "angle": "deg", "speed": "m/s"},
        mass=49.6,
        inertia={"Ixx": 1.0, "Iyy": 2.9, "Izz": 3.8, "Ixz": 0.09},
        geometry={"S": 5.902, "a": 6.849, "b": 0.9153, "y_p": 1.0, "eps": 0.0},
        environment={"rho": 1.225, "g": 9.80665},
        rate_reference_speed=30.0,
        polar=dict(CL=(0.05, 4.8, 2.0, -18.0), CD=(0.04, 0.1, 1.2), fit=(-0.15, 0.45)),
        C_D=dict(aq=0.0, adm=0.1, a2q=0.0, dm=0.02, a3q=0.0),
        C_Y=(-0.9, 0.1, 0.4, 0.0, 0.2),
        C_L=dict(q=5.0, dm=0.4, aq=0.0),
        C_l=(-0.1, -0.45, 0.1, -0.12, 0.01),
        C_m=(0.1, -1.2, -20.0, -1.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0),
        C_n=(0.12, -0.02, -0.2, 0.0, -0.1, 0.0, 0.0),
    ),
    "twin_otter": dict(
        name="DHC-6 Twin Otter",
        source=("Generic estimates for a twin-turboprop STOL utility aircraft. Geometry is the "
                "published planform; mass, inertia and aerodynamic coefficients are estimates, "
                "not an identified model."),
        units={"length": "ft", "mass": "kg", "inertia": "kg*m^2", "angle": "deg", "speed": "kt"},
        mass=5000.0,
        inertia={"Ixx": 22000.0, "Iyy": 30000.0, "Izz": 47000.0, "Ixz": 1000.0},
        geometry={"S": 420.0, "a": 65.0, "b": 6.5, "y_p": 9.2, "eps": 2.0},
        environment={"rho": 1.225, "g": 9.80665},
        rate_reference_speed=140.0,
        polar=dict(CL=(0.3, 5.2, 1.0, -12.0), CD=(0.03, 0.05, 1.0), fit=(-0.15, 0.4)),
        C_D=dict(aq=0.0, adm=0.05, a2q=0.0, dm=0.01, a3q=0.0),
        C_Y=(-0.8, 0.0, 0.3, 0.0, 0.15),
        C_L=dict(q=7.0, dm=0.35, aq=0.0),
        C_l=(-0.09, -0.5, 0.15, -0.15, 0.01),
        C_m=(0.05, -1.0, -25.0, -1.6, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0),
        C_n=(0.1, -0.05, -0.2, 0.0, -0.1, 0.0, 0.0),
    ),
}


def body_polynomials(polar, deg=4, n=400):
    lo, hi = polar["fit"]
    a = np.linspace(lo, hi, n)
    CLw = np.polyval(polar["CL"][::-1], a)
    CDw = np.polyval(polar["CD"][::-1], a)
    axial = CDw * np.cos(a) - CLw * np.sin(a)
    normal = CLw * np.cos(a) + CDw * np.sin(a)
    V = np.vander(a, deg + 1, increasing=True)
    ca = np.linalg.lstsq(V, axial, rcond=None)[0]
    cn = np.linalg.lstsq(V, normal, rcond=None)[0]
    return ca, cn


def term(theta, **exps):
    out = {"theta": float(round(theta, 6))}
    if exps:
        out["exponents"] = exps
    return out


def build(entry):
    ca, cn = body_polynomials(entry["polar"])
    d, l = entry["C_D"], entry["C_L"]
    gna = {
        "C_D": [
            term(ca[0]), term(ca[1], alpha=1), term(d["aq"], alpha=1, qtilde=1),
            term(d["adm"], alpha=1, dm=1), term(ca[2], alpha=2), term(d["a2q"], alpha=2, qtilde=1),
            term(d["dm"], dm=1), term(ca[3], alpha=3), term(d["a3q"], alpha=3, qtilde=1),
            term(ca[4], alpha=4),
        ],
        "C_Y": [term(v, **{k: 1}) for v, k in zip(entry["C_Y"], ("beta", "ptilde", "rtilde", "dl", "dn"))],
        "C_L": [
            term(cn[0]), term(cn[1], alpha=1), term(l["q"], qtilde=1), term(l["dm"], dm=1),
            term(l["aq"], alpha=1, qtilde=1), term(cn[2], alpha=2), term(cn[3], alpha=3),
            term(cn[4], alpha=4),
        ],
        "C_l": [term(v, **{k: 1}) for v, k in zip(entry["C_l"], ("beta", "ptilde", "rtilde", "dl", "dn"))],
        "C_m": [
            term(v, **e) for v, e in zip(entry["C_m"], (
                {}, {"alpha": 1}, {"qtilde": 1}, {"dm": 1}, {"alpha": 1, "qtilde": 1},
                {"alpha": 2, "qtilde": 1}, {"alpha": 2, "dm": 1}, {"alpha": 3, "qtilde": 1},
                {"alpha": 3, "dm": 1}, {"alpha": 4}))
        ],
        "C_n": [
            term(v, **e) for v, e in zip(entry["C_n"], (
                {"beta": 1}, {"ptilde": 1}, {"rtilde": 1}, {"dl": 1}, {"dn": 1}, {"beta": 2}, {"beta": 3}))
        ],
    }
    doc = {k: entry[k] for k in ("name", "source", "units", "mass", "inertia", "geometry",
                                "environment", "rate_reference_speed")}
    doc["gna"] = gna
    return doc


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for key, entry in AIRCRAFT.items():
        path = OUT / f"{key}.yaml"
        with open(path, "w", encoding="utf-8") as fh:
            yaml.safe_dump(build(entry), fh, sort_keys=False, width=100)
        print(path)


if __name__ == "__main__":
    main()
