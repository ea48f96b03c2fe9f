import numpy as np
import pytest

from curvlab import GridSpec, KernelSpec, MatrixMultiplier
from curvlab.multiplier import z

Z = z()

KERNELS = {
    "szego": KernelSpec("szego"),
    "bergman": KernelSpec("bergman"),
    "wb1": KernelSpec("weighted_bergman", alpha=1.0),
}

MULTIPLIERS = {
    "one_z": MatrixMultiplier.from_rows([[1], [Z]]),
    "z_one_minus_z": MatrixMultiplier.from_rows([[Z], [1 - Z]]),
    "p2q3": MatrixMultiplier.from_rows([[1, 0], [0, 1], [Z, Z**2]]),
}


@pytest.fixture
def small_grid():
    return GridSpec.disk(r_max=0.8, n_radial=5, n_angular=8)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number and title")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (rep.when != "call" and not rep.failed):
        return
    n, title = mark.args
    entry = _CRITERIA.setdefault(n, {"title": title, "ok": True, "count": 0})
    entry["count"] += rep.when == "call"
    entry["ok"] &= not rep.failed


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        e = _CRITERIA[n]
        status = "PASS" if e["ok"] else "FAIL"
        terminalreporter.write_line(f"criterion {n}: {status}  {e['title']} ({e['count']} checks)")
