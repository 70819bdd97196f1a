from __future__ import annotations

import re

import pytest
from hypothesis import settings

from unani_cdss.seed import build_seed_kb, load_seed_rules, load_seed_templates

settings.register_profile("suite", deadline=None)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def seed_kb():
    return build_seed_kb()


@pytest.fixture(scope="session")
def seed_rules():
    return load_seed_rules()


@pytest.fixture(scope="session")
def seed_templates():
    return load_seed_templates()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Print one PASSED/FAILED line per acceptance criterion."""
    lines = {}
    for outcome in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(report, "nodeid", "")
            match = re.search(r"test_acceptance\.py::test_c(\d+)_(\w+)", nodeid)
            if match:
                number = int(match.group(1))
                title = match.group(2).replace("_", " ")
                status = "PASSED" if outcome == "passed" else "FAILED"
                lines[number] = f"[acceptance] C{number} {title}: {status}"
    if lines:
        terminalreporter.section("acceptance criteria")
        for number in sorted(lines):
            terminalreporter.write_line(lines[number])
