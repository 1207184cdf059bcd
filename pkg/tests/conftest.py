import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "fixtures"

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

_criteria = {}


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES


@pytest.fixture
def record_criterion(request):
    """Attach a one-line detail to an acceptance test's summary line."""
    marker = request.node.get_closest_marker("acceptance")

    def record(detail):
        _criteria.setdefault(marker.args[0], {})["detail"] = detail

    return record


def pytest_runtest_logreport(report):
    if report.when == "teardown":
        return
    for key, value in report.user_properties:
        if key == "criterion":
            number, title = value
            entry = _criteria.setdefault(number, {})
            entry["title"] = title
            entry["seconds"] = entry.get("seconds", 0.0) + report.duration
            if report.when == "call" or report.failed:
                entry["passed"] = report.passed and entry.get("passed", True)


def pytest_collection_modifyitems(items):
    for item in items:
        marker = item.get_closest_marker("acceptance")
        if marker:
            item.user_properties.append(("criterion", tuple(marker.args)))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        entry = _criteria[number]
        if "title" not in entry:
            continue
        status = "PASS" if entry["passed"] else "FAIL"
        detail = f"  {entry['detail']}" if entry.get("detail") else ""
        terminalreporter.write_line(
            f"criterion {number}: {status}  {entry['title']} ({entry['seconds']:.1f}s){detail}"
        )


@pytest.fixture(scope="session")
def sweep_reports():
    """The default sweep (<= 3 states, binary in/out), both theories in one pass."""
    from substrate.sweep import EnumerationParams, exhaustive_check

    return exhaustive_check(EnumerationParams(3, 2, 2), ("Level1Functional", "FeedbackSensitive"))
