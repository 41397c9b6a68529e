import random

import pytest

from coinflip.model import AggregateCounts, ContinuationPolicy, all_patterns

EIGHT_PATTERNS = {"MM": 6, "FF": 4, "MF": 5, "FM": 5, "MMM": 2, "FFF": 1, "MFF": 1, "FMM": 1}


@pytest.fixture
def eight():
    return AggregateCounts(EIGHT_PATTERNS)


def random_table(rng: random.Random, max_children: int = 5, lo: float = 0.05, hi: float = 0.95) -> ContinuationPolicy:
    """Arbitrary history-dependent policy: one independent probability per prefix."""
    table = {p: rng.uniform(lo, hi) for n in range(1, max_children) for p in all_patterns(n)}
    return ContinuationPolicy.table(table, max_children)


def random_assumption34_table(rng: random.Random, max_children: int = 5) -> tuple[ContinuationPolicy, float, float]:
    """Table policy where the 2nd child ignores first sex and the 3rd depends only on same/mixed.

    Later parities are arbitrary per prefix. Returns (policy, p_S, p_D).
    """
    q1, p_S, p_D = (rng.uniform(0.05, 0.95) for _ in range(3))
    table = {"M": q1, "F": q1}
    for p in all_patterns(2):
        table[p] = p_S if p[0] == p[1] else p_D
    for n in range(3, max_children):
        for p in all_patterns(n):
            table[p] = rng.uniform(0.05, 0.95)
    return ContinuationPolicy.table(table, max_children), p_S, p_D


# -- one summary line per acceptance criterion --------------------------------

_criteria: dict[str, list[tuple[str, str]]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion reported in the summary")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    label = getattr(report, "criterion_label", None)
    if label:
        _criteria.setdefault(label, []).append((report.nodeid.split("::")[-1], report.outcome))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker:
        outcome.get_result().criterion_label = marker.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_criteria, key=lambda s: int(s.split()[0].lstrip("AC"))):
        results = _criteria[label]
        status = "PASS" if all(o == "passed" for _, o in results) else "FAIL"
        terminalreporter.write_line(f"{status}  {label}  ({len(results)} checks)")
