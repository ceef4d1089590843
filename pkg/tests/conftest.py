"""Shared fixtures and the per-criterion acceptance summary."""
import os

import pytest

SCENARIOS = os.path.join(os.path.dirname(__file__), os.pardir, "scenarios")

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    info = dict(report.user_properties).get("criterion")
    if info is None:
        return
    n, title = info
    prev = _criteria.get(n, (title, True))
    _criteria[n] = (title, prev[1] and report.passed)


@pytest.fixture(autouse=True)
def _criterion_tag(request):
    m = request.node.get_closest_marker("criterion")
    if m is not None:
        request.node.user_properties.append(("criterion", tuple(m.args)))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        title, ok = _criteria[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {n}: {title}")


@pytest.fixture(scope="session")
def scenario_path():
    return lambda name: os.path.join(SCENARIOS, f"{name}.toml")
