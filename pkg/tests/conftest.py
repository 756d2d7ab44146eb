import math
import sys
from pathlib import Path

import pytest
from hypothesis import settings

from leorelay.constants import DEFAULT_CONSTANTS
from leorelay.orbital import GroundStation, NtnConstellation, OrbitSpec, sso_inclination

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None, max_examples=60, derandomize=True)
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def relay_orbit():
    return OrbitSpec(550e3)


@pytest.fixture(scope="session")
def svalbard():
    return GroundStation(math.radians(78.23), math.radians(15.39), math.radians(10), name="Svalbard")


@pytest.fixture(scope="session")
def sso400():
    return OrbitSpec(400e3, sso_inclination(400e3))


def ring(altitude_km: float, count: int, relay_km: float = 550.0, **kw):
    cs = OrbitSpec(altitude_km * 1e3, **kw)
    relay = OrbitSpec(relay_km * 1e3, cs.inclination, cs.raan)
    return cs, NtnConstellation(relay, count)


R_E = DEFAULT_CONSTANTS.earth_radius
