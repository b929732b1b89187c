"""Shared fixtures and helpers for the test suite."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

import pytest

from shortcut_csp.algebra import load_scheme

DATA = Path(str(resources.files("shortcut_csp").joinpath("data/instances")))


@pytest.fixture(scope="session")
def rcc5():
    return load_scheme("rcc5")


@pytest.fixture(scope="session")
def point():
    return load_scheme("point")


@pytest.fixture(scope="session")
def eqs():
    return load_scheme("eq")


@pytest.fixture
def data_dir() -> Path:
    return DATA


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
