import functools
import math
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from minimax_curve import ProblemInstance, SolverConfig, multistart_solve  # noqa: E402

PI = math.pi

# acceptance lines collected by test_acceptance.py and printed at the end
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def ex1(tf: float) -> ProblemInstance:
    # goal as forced by the reported loop-plus-segment curve
    return ProblemInstance.from_values(0.0, 0.0, 0.0, 1.0, 0.0, 0.0, tf)


def ex2(beta: float) -> ProblemInstance:
    """Endpoints on the unit circle a turn of ``beta`` apart, t_f = beta + 2 pi."""
    h = 0.5 * beta
    return ProblemInstance.from_values(-math.sin(h), -math.cos(h), -h, math.sin(h), -math.cos(h), h, beta + 2 * PI)


def ex3(tf: float) -> ProblemInstance:
    return ProblemInstance.from_values(0.0, 0.0, -PI / 3, 0.4, 0.4, -PI / 6, tf)


@functools.lru_cache(maxsize=None)
def solved(inst: ProblemInstance):
    """Default multistart report, shared by every test module."""
    return multistart_solve(inst, SolverConfig())


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def record_criterion():
    def record(number: int, ok: bool, detail: str = "") -> None:
        ACCEPTANCE[number] = (bool(ok), detail)
        print(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")

    return record
