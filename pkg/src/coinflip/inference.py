"""Pearson chi-square tests on proportions, including order-respecting sibling tests.

The chi-square distribution is evaluated through the regularized incomplete
gamma function: a power series below ``a + 1`` and a Lentz continued
fraction above it (Numerical Recipes, section 6.2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .model import AggregateCounts, InsufficientDataError, SexDistribution

_EPS = 1e-16
_TINY = 1e-300
_MAX_ITER = 10_000


def _gamma_series(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x) by its power series."""
    term = total = 1.0 / a
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    else:
        raise ArithmeticError(f"gamma series failed to converge for a={a}, x={x}")
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_cfrac(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x) by modified Lentz."""
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    else:
        raise ArithmeticError(f"gamma continued fraction failed to converge for a={a}, x={x}")
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def _check_chi2_args(x: float, df: int) -> None:
    if df < 1 or int(df) != df:
        raise ValueError(f"df must be a positive integer, got {df}")
    if not x >= 0:
        raise ValueError(f"chi-square argument must be nonnegative, got {x}")


def chi2_cdf(x: float, df: int) -> float:
    _check_chi2_args(x, df)
    a, y = df / 2.0, x / 2.0
    if y == 0:
        return 0.0
    if y < a + 1.0:
        return min(1.0, _gamma_series(a, y))
    return max(0.0, 1.0 - _gamma_cfrac(a, y))


def chi2_sf(x: float, df: int) -> float:
    """Upper tail 1 - chi2_cdf, computed without cancellation."""
    _check_chi2_args(x, df)
    a, y = df / 2.0, x / 2.0
    if y == 0:
        return 1.0
    if y < a + 1.0:
        return max(0.0, 1.0 - _gamma_series(a, y))
    return min(1.0, _gamma_cfrac(a, y))


@dataclass(frozen=True)
class TestResult:
    statistic: float
    df: int
    p_value: float
    observed_prop: float
    null_prop: float
    n: int

    __test__ = False  # not a pytest class


def proportion_chi2_test(successes: int, n: int, p0: float) -> TestResult:
    """Two-cell Pearson test of a binomial proportion, no continuity correction."""
    if not 0.0 < p0 < 1.0:
        raise ValueError(f"degenerate null proportion p0={p0}; need 0 < p0 < 1")
    if n < 1:
        raise InsufficientDataError("proportion test needs at least one trial")
    if not 0 <= successes <= n:
        raise ValueError(f"successes={successes} outside [0, n={n}]")
    expected = n * p0
    stat = (successes - expected) ** 2 / (expected * (1.0 - p0))
    return TestResult(stat, 1, chi2_sf(stat, 1), successes / n, p0, n)


@dataclass(frozen=True)
class RunTally:
    """Births that follow a same-sex run of length >= 2, split by the run's sex."""

    male_runs: int = 0
    male_runs_continued: int = 0  # next child male
    female_runs: int = 0
    female_runs_continued: int = 0  # next child female


def tally_runs(counts: AggregateCounts) -> RunTally:
    """Count every birth k >= 3 whose preceding k-1 siblings all share a sex.

    A family contributes one instance per qualifying birth, so MMMM counts
    at k=3 and k=4.
    """
    mr = mc = fr = fc = 0
    for pattern, c in counts.items():
        for k in range(3, len(pattern) + 1):
            prefix = pattern[: k - 1]
            if len(set(prefix)) != 1:
                break
            if prefix[0] == "M":
                mr += c
                mc += c * (pattern[k - 1] == "M")
            else:
                fr += c
                fc += c * (pattern[k - 1] == "F")
    return RunTally(mr, mc, fr, fc)


def sequential_same_sex_tests(counts: AggregateCounts, sex_dist: SexDistribution) -> tuple[TestResult, TestResult]:
    """Test P(next child M | all previous M) = p_M, and the female analogue."""
    t = tally_runs(counts)
    if t.male_runs == 0:
        raise InsufficientDataError("no births following an all-male run of 2+")
    if t.female_runs == 0:
        raise InsufficientDataError("no births following an all-female run of 2+")
    return (
        proportion_chi2_test(t.male_runs_continued, t.male_runs, sex_dist.p_M),
        proportion_chi2_test(t.female_runs_continued, t.female_runs, sex_dist.p_F),
    )


def combined_null_proportion(sex_dist: SexDistribution, female_fraction: float) -> float:
    """Expected same-sex continuation rate when a fraction f of runs are female."""
    if not 0.0 <= female_fraction <= 1.0:
        raise ValueError(f"female fraction must lie in [0, 1], got {female_fraction}")
    return sex_dist.p_F * female_fraction + sex_dist.p_M * (1.0 - female_fraction)


def combined_sequence_test(counts: AggregateCounts, sex_dist: SexDistribution) -> TestResult:
    """Pool both run sexes and test the same-sex continuation rate."""
    t = tally_runs(counts)
    n = t.male_runs + t.female_runs
    if n == 0:
        raise InsufficientDataError("no births following a same-sex run of 2+")
    p0 = combined_null_proportion(sex_dist, t.female_runs / n)
    return proportion_chi2_test(t.male_runs_continued + t.female_runs_continued, n, p0)
