import numpy as np
import pytest

from lanepipe.stream_core import FrameGeometry

_criteria: dict[int, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    marker = getattr(report, "criterion", None)
    if marker is None:
        return
    n, title = marker
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        outcome = "PASS" if report.passed else "FAIL"
        if n not in _criteria or outcome == "FAIL":
            _criteria[n] = (title, outcome)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is not None:
        rep.criterion = (m.args[0], m.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        title, outcome = _criteria[n]
        terminalreporter.write_line(f"[{outcome}] criterion {n}: {title}")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_geometry():
    return FrameGeometry(32, 32)
