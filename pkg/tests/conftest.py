import time

import numpy as np
import pytest

from projangle.linalg_core import direct_sum, random_projection
from projangle.two_projections import planar_pair

SUITE_BUDGET_S = 60.0
_session_start = None
ACCEPTANCE_LINES = []
# criterion 9 also depends on the whole-suite runtime, known only at the end
RUNTIME_CRITERION = {}


def pytest_sessionstart(session):
    global _session_start
    _session_start = time.perf_counter()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    elapsed = None if _session_start is None else time.perf_counter() - _session_start
    if ACCEPTANCE_LINES or RUNTIME_CRITERION:
        terminalreporter.section("acceptance criteria")
        lines = list(ACCEPTANCE_LINES)
        if RUNTIME_CRITERION and elapsed is not None:
            ok = RUNTIME_CRITERION["ok"] and elapsed < SUITE_BUDGET_S
            lines.append(f"[{'PASS' if ok else 'FAIL'}] criterion 9: {RUNTIME_CRITERION['detail']}; "
                         f"suite runtime {elapsed:.1f} s < {SUITE_BUDGET_S:.0f} s")
        for line in sorted(lines, key=_criterion_number):
            terminalreporter.write_line(line)
    if elapsed is not None:
        status = "PASS" if elapsed < SUITE_BUDGET_S else "FAIL"
        terminalreporter.write_line(
            f"[{status}] full suite runtime {elapsed:.1f} s (budget {SUITE_BUDGET_S:.0f} s)")


def _criterion_number(line):
    try:
        return int(line.split("criterion ", 1)[1].split(":", 1)[0])
    except (IndexError, ValueError):
        return 0


def pytest_sessionfinish(session, exitstatus):
    if _session_start is not None and exitstatus == 0:
        if time.perf_counter() - _session_start >= SUITE_BUDGET_S:
            session.exitstatus = 1


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_pair(rng, n=None, max_dim=12):
    n = int(rng.integers(2, max_dim + 1)) if n is None else n
    return random_projection(rng, n), random_projection(rng, n)


def planar_sum(thetas):
    """Direct sum of planar pairs at the given angles."""
    pairs = [planar_pair(t) for t in thetas]
    return (direct_sum(*[p.matrix for p, _ in pairs]),
            direct_sum(*[q.matrix for _, q in pairs]))
