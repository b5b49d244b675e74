import pytest

from aeroflat import aircraft
from aeroflat.aircraft import load_aircraft, parse_aircraft
from aeroflat.errors import ConfigError
from aeroflat import yamlio

MINIMAL = """\
name: test
units: {length: m, mass: kg, inertia: kg*m^2, speed: m/s}
mass: 10
inertia: {Ixx: 1, Iyy: 2, Izz: 3}
geometry: {S: 1, a: 2, b: 0.5}
rate_reference_speed: 20
gna:
  C_D: [{theta: 0.02}, {theta: 0, exponents: {alpha: 1}}, {theta: 0, exponents: {alpha: 1, qtilde: 1}},
        {theta: 0, exponents: {alpha: 1, dm: 1}}, {theta: 1, exponents: {alpha: 2}},
        {theta: 0, exponents: {alpha: 2, qtilde: 1}}, {theta: 0, exponents: {dm: 1}},
        {theta: 0, exponents: {alpha: 3}}, {theta: 0, exponents: {alpha: 3, qtilde: 1}},
        {theta: 0, exponents: {alpha: 4}}]
  C_Y: [{theta: -1, exponents: {beta: 1}}, {theta: 0, exponents: {ptilde: 1}}, {theta: 0, exponents: {rtilde: 1}},
        {theta: 0, exponents: {dl: 1}}, {theta: 0, exponents: {dn: 1}}]
  C_L: [{theta: 0.1}, {theta: 5, exponents: {alpha: 1}}, {theta: 4, exponents: {qtilde: 1}},
        {theta: 0, exponents: {dm: 1}}, {theta: 0, exponents: {alpha: 1, qtilde: 1}},
        {theta: 0, exponents: {alpha: 2}}, {theta: 0, exponents: {alpha: 3}}, {theta: 0, exponents: {alpha: 4}}]
  C_l: [{theta: -0.1, exponents: {beta: 1}}, {theta: -0.4, exponents: {ptilde: 1}}, {theta: 0, exponents: {rtilde: 1}},
        {theta: -0.1, exponents: {dl: 1}}, {theta: 0, exponents: {dn: 1}}]
  C_m: [{theta: 0}, {theta: -1, exponents: {alpha: 1}}, {theta: -10, exponents: {qtilde: 1}},
        {theta: -1, exponents: {dm: 1}}, {theta: 0, exponents: {alpha: 1, qtilde: 1}},
        {theta: 0, exponents: {alpha: 2, qtilde: 1}}, {theta: 0, exponents: {alpha: 2, dm: 1}},
        {theta: 0, exponents: {alpha: 3, qtilde: 1}}, {theta: 0, exponents: {alpha: 3, dm: 1}},
        {theta: 0, exponents: {alpha: 4}}]
  C_n: [{theta: 0.1, exponents: {beta: 1}}, {theta: 0, exponents: {ptilde: 1}}, {theta: -0.1, exponents: {rtilde: 1}},
        {theta: 0, exponents: {dl: 1}}, {theta: -0.1, exponents: {dn: 1}}, {theta: 0, exponents: {beta: 2}},
        {theta: 0, exponents: {beta: 3}}]
"""


def test_bundled_files_load():
    assert set(aircraft.bundled_aircraft()) >= {"gtm", "twin_otter"}
    for name in aircraft.bundled_aircraft():
        P = load_aircraft(name)
        assert P.m > 0 and P.S > 0


def test_unit_conversion_gtm(gtm):
    assert gtm.m == pytest.approx(49.6 * 0.45359237)
    assert gtm.S == pytest.approx(5.902 * 0.3048 ** 2)
    assert gtm.a == pytest.approx(6.849 * 0.3048)
    assert gtm.Iyy == pytest.approx(2.9 * 14.593903 * 0.3048 ** 2)


def test_unit_conversion_twin_otter(twin_otter):
    assert twin_otter.y_p == pytest.approx(9.2 * 0.3048)
    assert twin_otter.eps == pytest.approx(2.0 * 3.141592653589793 / 180)


def test_rate_terms_scaled_by_reference_speed():
    P = parse_aircraft(yamlio.load(MINIMAL, "t.yaml"), "t.yaml")
    assert P.gna.theta("C_m", qtilde=1) == pytest.approx(-10 / 40)
    assert P.gna.theta("C_m", alpha=1) == pytest.approx(-1.0)


@pytest.mark.parametrize("edit,match", [
    (("mass: 10", "mass: -10"), "positive"),
    (("mass: 10", "mass: ten"), "number"),
    (("geometry: {S: 1", "geometry: {Q: 1, S: 1"), "unknown key"),
    (("kg*m^2", "furlong"), "unknown inertia unit"),
    (("{theta: 0.02}", "{theta: 0.02, exponents: {alpha: -1}}"), "non-negative"),
])
def test_errors_carry_location(edit, match):
    text = MINIMAL.replace(*edit, 1)
    with pytest.raises(ConfigError, match=match) as ei:
        parse_aircraft(yamlio.load(text, "t.yaml"), "t.yaml")
    assert "t.yaml:" in str(ei.value)


def test_duplicate_keys_rejected():
    with pytest.raises(ConfigError, match="duplicate"):
        yamlio.load("a: 1\na: 2\n", "d.yaml")


def test_missing_file():
    with pytest.raises(ConfigError, match="not found"):
        load_aircraft("no_such_plane")
