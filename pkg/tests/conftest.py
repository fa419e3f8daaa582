import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from lksim.harness.usecases import build_usecase  # noqa: E402


@pytest.fixture(scope="session")
def uc1():
    return build_usecase(1)


@pytest.fixture(scope="session")
def uc2():
    return build_usecase(2)


@pytest.fixture(scope="session")
def uc3():
    return build_usecase(3)


@pytest.fixture(scope="session")
def uc1_global(uc1):
    return uc1.global_scenario()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# criterion number -> PASS/FAIL line, filled by the acceptance suite
ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def criterion(capsys):
    """Record and print the single PASS/FAIL line of an acceptance criterion."""
    def report(number: int, ok: bool, detail: str) -> str:
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}: {detail}"
        ACCEPTANCE_LINES[number] = line
        with capsys.disabled():
            print(f"\n{line}")
        return line
    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
