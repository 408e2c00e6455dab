"""Shared fixtures and the acceptance-criteria summary."""

import pytest

_ACCEPTANCE = {}

TITLES = {
    1: "stationary Catalan coefficients",
    2: "Riccati-to-stationary convergence",
    3: "generating-function consistency",
    4: "kernel equivalence",
    5: "asymptotic variance",
    6: "two-sided symmetric value",
    7: "tree depth invariance",
    8: "deterministic limits",
    9: "Nash property",
    10: "rho/Bessel identity",
}


def _record(criterion, label, passed, detail):
    _ACCEPTANCE.setdefault(criterion, []).append((label, bool(passed), detail))


@pytest.fixture
def acceptance():
    """``acceptance(criterion, label, passed, detail)`` logs one sub-check."""
    return _record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(TITLES):
        checks = _ACCEPTANCE.get(n)
        if not checks:
            tr.write_line(f"NOT RUN  criterion {n:2d} ({TITLES[n]})")
            continue
        ok = all(passed for _, passed, _ in checks)
        parts = "; ".join(f"{label}: {'ok' if passed else 'FAILED'} [{detail}]"
                          for label, passed, detail in checks)
        tr.write_line(f"{'PASS' if ok else 'FAIL'}     criterion {n:2d} "
                      f"({TITLES[n]}): {parts}")
