"""Shipped example problems: spec and script pairs."""

from pathlib import Path

__all__ = ["DIR", "NAMES", "spec_path", "script_path"]

DIR = Path(__file__).resolve().parent
NAMES = ("diffop", "medolaghi", "point", "divergence")


def spec_path(name: str) -> Path:
    return DIR / f"{name}.spec"


def script_path(name: str) -> Path:
    return DIR / f"{name}.script"
