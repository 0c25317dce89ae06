"""Shared runs of the shipped examples and the acceptance summary."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import pytest

from equivframe.cli import Script, Session, load, run
from equivframe.problems import script_path, spec_path


@dataclass
class ExampleRun:
    name: str
    branch: str
    session: Session
    seconds: float

    @property
    def frame(self):
        return self.session.frame

    @property
    def reg(self):
        return self.session.frame.reg


_RUNS: dict[tuple[str, str], ExampleRun] = {}


def example_run(name: str, branch: str = "nonzero") -> ExampleRun:
    """Run a shipped spec+script pair once per test session."""
    key = (name, branch)
    if key not in _RUNS:
        t = time.perf_counter()
        _, frame = load(spec_path(name))
        sess = run(frame, Script.parse(script_path(name).read_text()), branch)
        _RUNS[key] = ExampleRun(name, branch, sess, time.perf_counter() - t)
    return _RUNS[key]


@pytest.fixture(scope="session")
def diffop() -> ExampleRun:
    return example_run("diffop")


@pytest.fixture(scope="session")
def medolaghi() -> ExampleRun:
    return example_run("medolaghi", "nonzero")


@pytest.fixture(scope="session")
def medolaghi_zero() -> ExampleRun:
    return example_run("medolaghi", "zero")


@pytest.fixture(scope="session")
def point() -> ExampleRun:
    return example_run("point")


@pytest.fixture(scope="session")
def divergence() -> ExampleRun:
    return example_run("divergence", "zero")


# -- acceptance summary --------------------------------------------------------

@dataclass
class Criterion:
    title: str
    limit: float
    items: list[tuple[str, bool, str]] = field(default_factory=list)
    seconds: float | None = None


CRITERIA: dict[str, Criterion] = {}


def criterion(key: str, title: str, limit: float) -> Criterion:
    return CRITERIA.setdefault(key, Criterion(title, limit))


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for key in sorted(CRITERIA):
        c = CRITERIA[key]
        ok = all(r for _, r, _ in c.items) and c.items and (c.seconds is not None and c.seconds < c.limit)
        failed = [f"{k} ({note})" if note else k for k, r, note in c.items if not r]
        secs = f"{c.seconds:.1f}s < {c.limit:.0f}s" if c.seconds is not None else "not timed"
        line = f"criterion {key} {c.title}: {'PASS' if ok else 'FAIL'} [{secs}]"
        if failed:
            line += " ; failing: " + ", ".join(failed)
        tr.write_line(line)
