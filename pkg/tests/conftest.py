"""Shared fixtures: solves are cached per session because several modules reuse them."""

from __future__ import annotations

import functools

import pytest

from debyescreen import SolverConfig, make_maxwellian, make_power_law, solve

PROFILE_FACTORIES = {
    "maxwellian": lambda: make_maxwellian(1.0),
    "power_law": lambda: make_power_law(1.0, 3.0),
}

# criterion number -> (title, passed, detail); filled by the acceptance tests
ACCEPTANCE_LINES: dict[int, tuple[str, bool, str]] = {}


@functools.lru_cache(maxsize=None)
def cached_profile(name: str, T: float = 1.0):
    if name == "maxwellian":
        return make_maxwellian(T)
    return PROFILE_FACTORIES[name]()


@functools.lru_cache(maxsize=None)
def cached_solve(name: str, theta: float, T: float = 1.0, n: int = 2000):
    return solve(cached_profile(name, T), SolverConfig(theta=theta, n=n))


@pytest.fixture(scope="session")
def maxwellian():
    return cached_profile("maxwellian")


@pytest.fixture(scope="session")
def power_law():
    return cached_profile("power_law")


@pytest.fixture(scope="session")
def solved():
    """``solved(name, theta, T=1.0, n=2000)`` returns a cached :class:`SolveResult`."""
    return cached_solve


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        title, passed, detail = ACCEPTANCE_LINES[number]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  criterion {number:2d}  {title}: {detail}")
