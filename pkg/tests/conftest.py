import numpy as np
import pytest

PD = [[3.0, 0.0], [5.0, 1.0]]
HAWK_DOVE = [[-1.0, 2.0], [0.0, 1.0]]
RPS = [[0.0, -1.0, 1.0], [1.0, 0.0, -1.0], [-1.0, 1.0, 0.0]]


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


def random_game(rng, n, scale=5.0):
    return rng.uniform(-scale, scale, (n, n))


def random_interior(rng, n, floor=0.05):
    """Dirichlet sample pushed away from the boundary."""
    x = rng.dirichlet(np.ones(n))
    x = floor / n + (1 - floor) * x
    return x / x.sum()


# acceptance reporting: one PASS/FAIL line per criterion in the terminal summary

_CRITERIA: dict[int, dict] = {}


@pytest.fixture
def criterion(request):
    """Attach measured values to the current acceptance criterion."""
    marker = request.node.get_closest_marker("acceptance")
    entry = _CRITERIA.setdefault(marker.args[0], {"title": marker.args[1], "detail": [], "passed": None})

    def note(text):
        entry["detail"].append(text)

    return note


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or report.when not in ("setup", "call"):
        return
    entry = _CRITERIA.setdefault(marker.args[0], {"title": marker.args[1], "detail": [], "passed": None})
    if report.failed:
        entry["passed"] = False
    elif report.when == "call":
        entry["passed"] = report.passed


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        status = "PASS" if entry["passed"] else "FAIL"
        detail = "; ".join(entry["detail"])
        terminalreporter.write_line(f"criterion {number:2d} {status}  {entry['title']}: {detail}")
