"""Machine reports of the shipped examples against the frozen golden files."""

from __future__ import annotations

from pathlib import Path

import pytest

from conftest import example_run

REPORTS = Path(__file__).parent / "golden" / "reports"


def normalized(text: str) -> list[str]:
    return [" ".join(line.split()) for line in text.strip().splitlines()]


@pytest.mark.parametrize("path", sorted(REPORTS.glob("*.txt")), ids=lambda p: p.stem)
def test_machine_report_matches_golden(path):
    name, branch = path.stem.rsplit("_", 1)
    got = example_run(name, branch).frame.report("machine")
    assert normalized(got) == normalized(path.read_text())
