"""Shared fixtures and the per-criterion acceptance summary."""

from collections import defaultdict

import numpy as np
import pytest

ACCEPTANCE_TITLES = {
    1: "decoupling inequality (Monte Carlo mean vs bound)",
    2: "transpose trick on a maximally entangled cut",
    3: "Uhlmann isometry within 2*sqrt(eps)",
    4: "one-shot protocol sanity",
    5: "triangle lemma 2*eps1 + eps2",
    6: "assisted rate formulas",
    7: "half-Marton correspondence",
    8: "unassisted identity Qbar = Q - E",
    9: "regularized additivity at n = 2",
    10: "typical set properties and gentle measurement",
    11: "entropy property suite",
    12: "CLI determinism",
}

_outcomes: dict[int, list[bool]] = defaultdict(list)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    criterion = int(marker.args[0])
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _outcomes[criterion].append(report.outcome == "passed")


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(ACCEPTANCE_TITLES):
        results = _outcomes.get(criterion)
        if not results:
            status = "NOT RUN"
        else:
            status = "PASS" if all(results) else "FAIL"
        terminalreporter.write_line(f"criterion {criterion:2d}: {status:7s} {ACCEPTANCE_TITLES[criterion]}")
