"""The shipped example systems."""
from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

from .io import loads_system
from .system import QSystem

#: Names of the systems covering the acceptance suite.
CORPUS = ("unit", "estar", "three_slope", "estar_tensor", "two_eigen")
#: Auxiliary systems used by individual checks.
EXTRAS = ("estar_block", "sections_counterexample", "covariant_convergent")


def _text(name: str) -> str:
    try:
        return resources.files("qstokes").joinpath("data").joinpath(f"{name}.json").read_text()
    except FileNotFoundError:
        raise KeyError(f"unknown example {name!r}; available: {', '.join(CORPUS + EXTRAS)}") from None


@lru_cache(maxsize=None)
def load_example(name: str) -> QSystem:
    return loads_system(_text(name))


def example_metadata(name: str) -> dict:
    return dict(json.loads(_text(name)).get("metadata") or {})


def example_path(name: str):
    return resources.files("qstokes").joinpath("data").joinpath(f"{name}.json")
