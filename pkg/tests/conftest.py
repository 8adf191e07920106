import sys

import numpy as np
import pytest

from driftmdp.core import ProblemShape, random_model, random_policy


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo the acceptance verdict lines (one per criterion) in the summary."""
    module = sys.modules.get("test_acceptance") or sys.modules.get(
        "tests.test_acceptance"
    )
    lines = getattr(module, "VERDICT_LINES", None) if module else None
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture
def shape42():
    return ProblemShape(4, 2)


@pytest.fixture
def shape22():
    return ProblemShape(2, 2)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_models(shape, count, rng):
    return [random_model(shape, rng) for _ in range(count)]


def random_policies(shape, count, rng):
    return [random_policy(shape, rng) for _ in range(count)]
