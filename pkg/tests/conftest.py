from __future__ import annotations

import json
from pathlib import Path

import pytest

from opengap.classical import open_baker_system, three_disk_system

FROZEN = json.loads((Path(__file__).parent / "oracles" / "frozen.json").read_text())

_CRITERIA: list[tuple[str, bool, str]] = []


class Criterion:
    """Collects the measured numbers of one acceptance criterion and its verdict."""

    def __init__(self, label: str):
        self.label = label
        self.details: dict[str, object] = {}

    def note(self, **values):
        self.details.update(values)

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        text = ", ".join(f"{k}={_fmt(v)}" for k, v in self.details.items())
        _CRITERIA.append((self.label, exc_type is None, text))
        return False


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


@pytest.fixture
def criterion():
    return Criterion


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, text in sorted(_CRITERIA, key=lambda t: int(t[0].split()[0][2:])):
        terminalreporter.write_line(f"{label}: {'PASS' if ok else 'FAIL'}  {text}")


@pytest.fixture(scope="session")
def frozen():
    return FROZEN


@pytest.fixture(scope="session")
def baker():
    return open_baker_system()


@pytest.fixture(scope="session")
def three_disk():
    return three_disk_system()
