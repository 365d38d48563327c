import numpy as np
import pytest

from sparsefoot import _pykernels, kernels

BACKENDS = {"python": _pykernels}
try:
    from sparsefoot import _kernels
    BACKENDS["compiled"] = _kernels
except ImportError:
    pass


@pytest.fixture(params=sorted(BACKENDS))
def backend(request):
    return BACKENDS[request.param]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_report_header(config):
    return f"sparsefoot kernel backend: {kernels.BACKEND}; tested: {', '.join(sorted(BACKENDS))}"


_CRITERIA = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    n = marker.args[0]
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        detail = dict(item.user_properties).get("detail", "")
        _CRITERIA[n] = (report.outcome, report.duration, item.name, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        outcome, duration, name, detail = _CRITERIA[n]
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {n}: {verdict} ({duration:.2f} s) {name} {detail}".rstrip())
