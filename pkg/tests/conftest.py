import time

import pytest

from gridforge import auth
from gridforge.model import Resource, SchedulingParams

# name, mips, bandwidth, memory: the four registered-resource tables
R16_TABLE = [
    ("R1", 10, 100, 100), ("R2", 20, 150, 200), ("R3", 30, 200, 300), ("R4", 40, 250, 400),
    ("R5", 50, 300, 500), ("R6", 60, 350, 600), ("R7", 70, 400, 700), ("R8", 80, 450, 800),
    ("R9", 90, 500, 900), ("R10", 100, 550, 1000), ("R11", 110, 600, 1100), ("R12", 120, 650, 1200),
    ("R13", 130, 700, 1300), ("R14", 140, 750, 1400), ("R15", 150, 800, 1500), ("R16", 160, 850, 1600),
]
R16_GRANULARITY = 3


@pytest.fixture(scope="session")
def grid_resources():
    return [
        Resource(name, name, mips, bw, mem, float(i))
        for i, (name, mips, bw, mem) in enumerate(R16_TABLE)
    ]


@pytest.fixture
def params():
    return SchedulingParams(granularity_s=3, tcomm_s=3)


@pytest.fixture(scope="session")
def keys():
    """A small pool of 1024-bit keypairs, generated once."""
    return [auth.generate_keypair(1024) for _ in range(3)]


# -- acceptance reporting ----------------------------------------------------

_ACCEPTANCE = []
_SESSION_START = [0.0]
SUITE_BUDGET_S = 60.0


def pytest_sessionstart(session):
    _SESSION_START[0] = time.perf_counter()


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call":
        return
    _ACCEPTANCE.append((marker.args[0], marker.args[1], report.passed, report.duration))


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    elapsed = time.perf_counter() - _SESSION_START[0]
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number, title, passed, duration in sorted(_ACCEPTANCE, key=lambda r: str(r[0])):
        tr.write_line(f"[{'PASS' if passed else 'FAIL'}] {number}: {title} ({duration:.2f}s)")
    ok = elapsed < SUITE_BUDGET_S
    tr.write_line(
        f"[{'PASS' if ok else 'FAIL'}] 8c: full session runtime {elapsed:.1f}s < {SUITE_BUDGET_S:.0f}s"
    )


def pytest_sessionfinish(session, exitstatus):
    if time.perf_counter() - _SESSION_START[0] >= SUITE_BUDGET_S and exitstatus == 0:
        session.exitstatus = 1
