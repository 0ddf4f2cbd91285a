"""Shared fixtures and the acceptance-criteria report hook.

Acceptance tests record one verdict line per criterion; a terminal-summary
hook prints the collected lines after the run so they are visible without -s.
"""

from __future__ import annotations

import pytest

from fractinc import Resolution, SharpnessParams, gen_sharpness_construction

CALIBRATED_PAIRS = [(0.5, 1.5), (0.25, 1.25)]
RESOLUTION_RANGE = range(6, 11)


@pytest.fixture(scope="session")
def sharpness_suite():
    """Sharpness constructions for both calibrated (s, t) pairs, k = 6..10."""
    suite = {}
    for s, t in CALIBRATED_PAIRS:
        for k in RESOLUTION_RANGE:
            params = SharpnessParams(s=s, t=t, resolution=Resolution(k))
            suite[(s, t, k)] = gen_sharpness_construction(params)
    return suite


def pytest_configure(config):
    config._acceptance_lines = []


@pytest.fixture(scope="session")
def criterion_report(request):
    lines = request.config._acceptance_lines

    def record(number: int, label: str, passed: bool, detail: str) -> None:
        verdict = "PASS" if passed else "FAIL"
        lines.append(f"[criterion {number:02d}] {verdict} {label}: {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    lines = getattr(terminalreporter.config, "_acceptance_lines", [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(lines):
        terminalreporter.write_line(line)
