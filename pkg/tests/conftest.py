import math

import pytest

from aeroflat.aircraft import load_aircraft
from aeroflat.flatplan import FlatOutputTrajectory
from aeroflat import series as ts

G = 9.80665


@pytest.fixture(scope="session")
def gtm():
    return load_aircraft("gtm")


@pytest.fixture(scope="session")
def twin_otter():
    return load_aircraft("twin_otter")


@pytest.fixture
def roll_traj():
    return FlatOutputTrajectory(x=lambda t: 100 / 3.6 * t, y=0.0, z=lambda t: 0.5 * G * t * t,
                                zeta=lambda t: math.pi / 2 * t)


@pytest.fixture
def slip_traj():
    return FlatOutputTrajectory(
        x=lambda t: 29.10852587 * t + 50 * ts.sin(t / 60.0),
        y=lambda t: 60 * ts.cos(t / 100.0 + 2.0),
        z=lambda t: -1000 + 5.9832932 * t + 70 * ts.sin(t / 70.0),
        zeta=0.0,
    )


@pytest.fixture
def level_traj():
    return FlatOutputTrajectory(x=lambda t: 30.0 * t, y=0.0, z=0.0, zeta=0.0)


_ACCEPTANCE = []


@pytest.fixture(scope="session")
def acceptance_report():
    """Record one line per acceptance criterion; printed in the terminal summary."""
    def report(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE.append((number, line))
        print(line)
        return ok
    return report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_ACCEPTANCE):
            terminalreporter.write_line(line)
