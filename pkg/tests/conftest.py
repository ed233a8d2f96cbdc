from __future__ import annotations

import math

import pytest

from leoirs.channels import build_channel_set
from leoirs.geometry import ScenarioConfig

# One line per acceptance criterion, appended by tests/test_acceptance.py and
# echoed after the run so the verdicts are visible in one block.
ACCEPTANCE_REPORT: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_REPORT:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_REPORT:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def tiny_cfg() -> ScenarioConfig:
    """Small deterministic scenario: 2x2 node arrays, 2-element surfaces."""
    return ScenarioConfig(
        n1x=2, n1y=2, n2x=2, n2y=2,
        m1x=2, m1y=1, m2x=2, m2y=1,
        rician_factor_db=math.inf,
    )


@pytest.fixture(scope="session")
def los_cfg() -> ScenarioConfig:
    """Default scenario with the fading switched off (pure LoS)."""
    return ScenarioConfig(rician_factor_db=math.inf)


@pytest.fixture(scope="session")
def cs_los_t10(los_cfg):
    """Deterministic full-size channel set at t = 10 s (shared, read-only)."""
    return build_channel_set(los_cfg, 10.0)


@pytest.fixture(scope="session")
def cs_tiny_t10(tiny_cfg):
    return build_channel_set(tiny_cfg, 10.0)
