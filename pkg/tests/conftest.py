import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "rpdecay", deadline=None, max_examples=25, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "rpdecay"))

# filled by test_acceptance, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture
def out_env(tmp_path, monkeypatch):
    monkeypatch.setenv("RPDECAY_OUT", str(tmp_path))
    return tmp_path
