import numpy as np
import pytest

from mcac import profile
from mcac.reaction import make_cubic

ACCEPTANCE = []


def record(number: int, title: str, passed: bool, detail: str = "") -> None:
    ACCEPTANCE.append((number, title, bool(passed), detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number, title, ok, detail in sorted(ACCEPTANCE):
        tr.write_line(f"[{'PASS' if ok else 'FAIL'}] {number:>2}. {title}  {detail}")


@pytest.fixture(scope="session")
def cubic():
    return make_cubic()


@pytest.fixture(scope="session")
def standing(cubic):
    return profile.solve_standing(cubic)


@pytest.fixture(scope="session")
def sigma(standing):
    return profile.sigma_bar(standing)[0]


@pytest.fixture(scope="session")
def theta1(standing, sigma):
    return profile.solve_theta1(standing, sigma)
