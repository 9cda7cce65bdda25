import os

import pytest
from hypothesis import HealthCheck, settings

from ballistic.physics import PhysicalParams, SlitSpec

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def unit():
    """hbar = 1 and m = 1/2, so D = 1."""
    return PhysicalParams(0.5, 1.0, hbar=1.0)


@pytest.fixture
def unit_slit():
    return SlitSpec(0.0, 1.0)


# ------------------------------------------------------- acceptance report

_VERDICTS: list[str] = []


@pytest.fixture
def verdict():
    """Record one acceptance line: ``verdict(number, ok, detail)``."""
    def record(number, ok: bool, detail: str) -> bool:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        _VERDICTS.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
