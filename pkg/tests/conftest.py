import math

import pytest

from fsomdi.atmosphere import LinkGeometry, TurbulenceProfile
from fsomdi.channel import resolve_channel
from fsomdi.presets import AO, WEATHER


def constant_cn2(value):
    return lambda h: value + 0.0 * h


@pytest.fixture(scope="session")
def clear_10km():
    geom = LinkGeometry(z=10e3, aperture_a=0.5)
    return resolve_channel(geom, WEATHER["clear"], AO["medium"])


@pytest.fixture(scope="session")
def medium_setup():
    # constant C_n^2 chosen so the Rytov variance lands inside [1, 5)
    geom = LinkGeometry(z=10e3, theta_el=math.radians(85), aperture_a=0.5)
    return resolve_channel(geom, WEATHER["clear"], AO["medium"], cn2=constant_cn2(3e-12))


@pytest.fixture(scope="session")
def strong_setup():
    geom = LinkGeometry(z=10e3, aperture_a=0.5)
    return resolve_channel(geom, WEATHER["clear"], AO["medium"], cn2=constant_cn2(1e-11))


@pytest.fixture(scope="session")
def calm_setup():
    geom = LinkGeometry(z=10e3, aperture_a=0.5)
    return resolve_channel(geom, TurbulenceProfile(A=0.0, v=1.0), cn2=constant_cn2(0.0))


ACCEPTANCE_LINES = []


def record(number, passed, detail):
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
