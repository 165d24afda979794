import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from pbox_expect.objective import ShapeDescriptor, parse_expression
from pbox_expect.pbox import exponential_pbox

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=100, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def band():
    """Band between Exp(0.2) and Exp(0.5) CDFs."""
    return exponential_pbox(0.2, 0.5)


@pytest.fixture(scope="session")
def examples(band):
    """(h, shape) for the decreasing, peaked and oscillating test objectives."""
    return {
        "decreasing": (parse_expression("20 - x"), ShapeDescriptor.nonincreasing()),
        "peak": (parse_expression("60 - (x - 5)^2"), ShapeDescriptor.unimodal_max(5.0)),
        "oscillating": (parse_expression("0.6*x*cos(x)"), None),
    }


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240607)
