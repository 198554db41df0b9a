import numpy as np
import pytest

from qmpemba.generator import build_full_redfield, reduced_from_rates
from qmpemba.model import BathSpec, v_model_rates, v_model_system

# Frozen values from an independent 40-digit evaluation of the rate formulas.
K = 0.025414940825367983
PHI = 0.056244822476103949
P_INF = 0.27406861906119698
PLATEAU = 0.18877033439907272
EXACT_ROOTS = (-2.710124926106356e-07, -0.025414725147658445, -0.081659707966688859)

_acceptance: dict[str, str] = {}


@pytest.fixture(scope="session")
def canonical_rates():
    return v_model_rates(1.0, BathSpec())


@pytest.fixture(scope="session")
def canonical_gen(canonical_rates):
    return reduced_from_rates(canonical_rates, 1e-4)


@pytest.fixture(scope="session")
def canonical_full():
    return build_full_redfield(v_model_system(1.0, 1e-4), [BathSpec()])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    if "test_acceptance.py" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        _acceptance[name] = "PASS" if report.outcome == "passed" else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, verdict in sorted(_acceptance.items()):
        terminalreporter.write_line(f"{verdict}  {name}")
