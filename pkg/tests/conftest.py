from pathlib import Path

import pytest

from hnncalc import load_scenario

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def scenario_path(name: str) -> str:
    return str(SCENARIOS / f"{name}.json")


_cache = {}


def get(name: str):
    if name not in _cache:
        _cache[name] = load_scenario(scenario_path(name))
    return _cache[name]


@pytest.fixture
def bs23():
    return get("bs23")


@pytest.fixture
def torus17():
    return get("torus_1_7")


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep
