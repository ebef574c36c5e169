import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("lab", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("lab")


@pytest.fixture(autouse=True)
def _isolated_cache(tmp_path, monkeypatch):
    monkeypatch.setenv("LQLAB_CACHE_DIR", str(tmp_path / "cache"))


def pytest_configure(config):
    config._criterion_lines = []


def pytest_terminal_summary(terminalreporter, config):
    lines = sorted(config._criterion_lines)
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in lines:
            terminalreporter.write_line(line)
