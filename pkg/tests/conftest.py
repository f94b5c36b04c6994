import math

import pytest
from hypothesis import settings

from lorhom.factor import FactorSpec
from lorhom.timelike import build_modified_factor, derive_params

settings.register_profile("lorhom", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("lorhom")


@pytest.fixture(scope="session")
def unit():
    return FactorSpec.unit()


@pytest.fixture(scope="session")
def base():
    return FactorSpec.base()


@pytest.fixture(scope="session")
def params(base):
    return derive_params(base, 6)


@pytest.fixture(scope="session")
def modified(base, params):
    return build_modified_factor(base, params)


HALF_PI = math.pi / 2


CRITERIA = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.rpartition("::")[2]
    if "test_acceptance.py" not in report.nodeid or not name.startswith("test_criterion_"):
        return
    if report.when == "call" or report.failed:
        number = int(name.split("_")[2])
        CRITERIA[number] = CRITERIA.get(number, True) and report.passed


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if CRITERIA[number] else 'FAIL'}")
