import numpy as np
import pytest

from mycosim.ingest import ConductiveGrid


def make_grid(mask):
    return ConductiveGrid(np.asarray(mask, dtype=bool), {"source": "test"})


def naive_run(mask, u, v, steps, dt=0.015, dx=2.0, D=1.0, a=0.13, b=0.013, c1=0.26, c2=0.05, I=0.0):
    """Double loop over the lattice, written straight from the model equations."""
    rows, cols = mask.shape
    u = np.array(u, dtype=float)
    v = np.array(v, dtype=float)
    for _ in range(steps):
        un = np.zeros_like(u)
        vn = np.zeros_like(v)
        for i in range(rows):
            for j in range(cols):
                if not mask[i, j]:
                    continue
                lap = 0.0
                for di, dj in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                    ni, nj = i + di, j + dj
                    if 0 <= ni < rows and 0 <= nj < cols and mask[ni, nj]:
                        lap += u[ni, nj] - u[i, j]
                lap /= dx * dx
                x, y = u[i, j], v[i, j]
                un[i, j] = x + dt * (c1 * x * (x - a) * (1 - x) - c2 * x * y + I + D * lap)
                vn[i, j] = y + dt * b * (x - y)
        u, v = un, vn
    return u, v


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# -- acceptance report ------------------------------------------------------------

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    entry = _CRITERIA.setdefault(number, {"title": title, "ok": True, "seconds": 0.0, "why": ""})
    if report.when in ("setup", "call"):
        entry["seconds"] += report.duration
    if report.failed:
        entry["ok"] = False
        if not entry["why"] and report.longrepr is not None:
            crash = getattr(report.longrepr, "reprcrash", None)
            entry["why"] = (crash.message if crash else str(report.longrepr)).splitlines()[0][:160]


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        e = _CRITERIA[number]
        status = "PASS" if e["ok"] else "FAIL"
        line = f"criterion {number:>2}: {status}  {e['title']} ({e['seconds']:.1f} s)"
        if not e["ok"]:
            line += f"  -- {e['why']}"
        terminalreporter.write_line(line)
