"""Shared fixtures plus the acceptance-criteria summary hook."""

from __future__ import annotations

import pytest

import support

_ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def pytest_addoption(parser):
    parser.addoption(
        "--record-protocol", action="store_true", default=False,
        help="re-record the wire fixtures instead of comparing against them",
    )


@pytest.fixture
def acceptance():
    """Recorder for acceptance criteria: prints one PASS/FAIL line per criterion."""

    def record(name: str, ok: bool, detail: str = ""):
        _ACCEPTANCE_RESULTS.append((name, ok, detail))
        suffix = f" ({detail})" if detail else ""
        print(f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'}{suffix}")
        assert ok, f"acceptance criterion {name} failed: {detail}"

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _ACCEPTANCE_RESULTS:
        suffix = f"  ({detail})" if detail else ""
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}{suffix}")


@pytest.fixture
def small_schema():
    return support.small_schema()


@pytest.fixture
def branching_schema():
    return support.branching_schema()


@pytest.fixture
def bank(small_schema):
    return support.bank_with_recs(small_schema, [])


@pytest.fixture
def stocked_bank(small_schema):
    """Bank with four active recommendations and one retired."""
    bank = support.bank_with_recs(small_schema, ["rec-w", "rec-x", "rec-y", "rec-z"])
    bank.add_recommendation(support.make_rec("rec-r", status="retired"))
    return bank
