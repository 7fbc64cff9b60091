"""Shared fixtures and the acceptance verdict summary."""

import os
import re

import pytest

from solbuglab import corpus

_CRITERIA = {
    1: "buggy/fixed pairs, one finding each, under a second",
    2: "catalog size, categories, severity grading",
    3: "claims coverage ratio",
    4: "scoring matches a brute-force oracle; undefined stays undefined",
    5: "record merging is order-free and stable",
    6: "crafted traps behave as annotated",
    7: "detectors respect declared version ranges",
    8: "lossless lexing and full statement coverage",
    9: "watch state durability",
}
_RESULTS = {}

_NODE_RE = re.compile(r"test_acceptance\.py::test_criterion_(\d+)")


def pytest_runtest_logreport(report):
    match = _NODE_RE.search(report.nodeid)
    if not match:
        return
    number = int(match.group(1))
    if report.when == "call":
        _RESULTS[number] = report.passed
    elif report.failed:
        _RESULTS[number] = False


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance")
    for number in sorted(_CRITERIA):
        if number in _RESULTS:
            verdict = "PASS" if _RESULTS[number] else "FAIL"
        else:
            verdict = "NOT RUN"
        terminalreporter.write_line(
            "acceptance %d (%s): %s" % (number, _CRITERIA[number], verdict))


@pytest.fixture(scope="session")
def manifest():
    return corpus.load_manifest(corpus.default_manifest_path())


@pytest.fixture(scope="session")
def contracts_dir():
    return os.path.join(os.path.dirname(corpus.default_manifest_path()), "contracts")


def fixture_source(name: str) -> str:
    path = os.path.join(os.path.dirname(corpus.default_manifest_path()),
                        "contracts", name)
    with open(path, "r", encoding="utf-8") as handle:
        return handle.read()
