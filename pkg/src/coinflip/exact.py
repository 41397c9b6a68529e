"""Closed-form selection-bias expressions and the enumeration oracle that checks them.

The closed forms express P(first three share a sex | N >= 3) and related
quantities through correction factors (ratios of stopping probabilities).
:func:`enumerate_distribution` computes the exact law of completed sex
patterns for any policy, and :func:`event_probability` conditions on it, so
every closed form can be verified against brute force.
"""
from __future__ import annotations

import math
import warnings
from collections.abc import Callable, Iterator, Mapping
from dataclasses import dataclass

from .model import (
    ConditioningError,
    ContinuationPolicy,
    CorrectionFactors,
    SexDistribution,
    all_patterns,
    pattern_is_same_sex_prefix,
)

MAX_ENUMERATION_CHILDREN = 20

Predicate = Callable[[str], bool]


class InconsistentInputWarning(UserWarning):
    """A closed form produced a value outside [0, 1]."""


# -- pattern predicates ---------------------------------------------------


def first_k_same(k: int) -> Predicate:
    """The first ``k`` children exist and share a sex (MMM/FFF for k=3, MM?/FF? for k=2)."""
    return lambda p: len(p) >= k and pattern_is_same_sex_prefix(p, k)


def starts_with(prefix: str) -> Predicate:
    return lambda p: p.startswith(prefix)


def length_at_least(n: int) -> Predicate:
    return lambda p: len(p) >= n


def length_exactly(n: int) -> Predicate:
    return lambda p: len(p) == n


def both(*preds: Predicate) -> Predicate:
    return lambda p: all(f(p) for f in preds)


def anything(p: str) -> bool:
    return True


# -- enumeration oracle ---------------------------------------------------


@dataclass(frozen=True)
class PatternDistribution(Mapping[str, float]):
    """Exact probability of every completed sex pattern of length 1..L."""

    probs: Mapping[str, float]

    def __getitem__(self, pattern: str) -> float:
        return self.probs[pattern]

    def __iter__(self) -> Iterator[str]:
        return iter(self.probs)

    def __len__(self) -> int:
        return len(self.probs)

    def total(self) -> float:
        return math.fsum(self.probs.values())

    def mass(self, predicate: Predicate) -> float:
        return math.fsum(q for p, q in self.probs.items() if predicate(p))


def enumerate_distribution(sex: SexDistribution, policy: ContinuationPolicy) -> PatternDistribution:
    """Law of the completed pattern: product of sex probabilities and stop/continue decisions."""
    L = policy.max_children
    if L > MAX_ENUMERATION_CHILDREN:
        raise MemoryError(
            f"refusing to enumerate 2^{L} patterns; max_children must be <= {MAX_ENUMERATION_CHILDREN}"
        )
    probs: dict[str, float] = {}
    # reach[s] = P(first len(s) children are s); built breadth first.
    reach = {"": 1.0}
    for n in range(1, L + 1):
        nxt = {}
        for prefix, p in reach.items():
            for s in "MF":
                nxt[prefix + s] = p * sex.prob(s)
        reach = {}
        for pattern, p in nxt.items():
            q = policy(pattern)
            probs[pattern] = p * (1.0 - q)
            if q > 0 and n < L:
                reach[pattern] = p * q
    return PatternDistribution(probs)


def event_probability(dist: PatternDistribution, event: Predicate, given: Predicate = anything) -> float:
    """P(event | given) under ``dist``."""
    denom = dist.mass(given)
    if denom <= 0:
        raise ConditioningError("conditioning event has probability zero")
    return dist.mass(both(event, given)) / denom


def correction_factors_from_policy(sex: SexDistribution, policy: ContinuationPolicy) -> CorrectionFactors:
    dist = enumerate_distribution(sex, policy)
    ge2, ge3 = length_at_least(2), length_at_least(3)
    p_ge2 = dist.mass(ge2)
    p_ge3_given_ge2 = event_probability(dist, ge3, ge2)
    if p_ge3_given_ge2 <= 0:
        raise ConditioningError("P(N>=3) is zero under this policy")

    def second(first_two: str) -> float:
        return event_probability(dist, ge3, both(ge2, starts_with(first_two))) / p_ge3_given_ge2

    return CorrectionFactors(
        first_male=event_probability(dist, ge2, starts_with("M")) / p_ge2,
        first_female=event_probability(dist, ge2, starts_with("F")) / p_ge2,
        second_male=second("MM"),
        second_female=second("FF"),
    )


def third_factors_from_policy(sex: SexDistribution, policy: ContinuationPolicy) -> tuple[float, float]:
    """P(N=3 | N>=3, MMM)/P(N=3 | N>=3) and the FFF analogue."""
    dist = enumerate_distribution(sex, policy)
    eq3, ge3 = length_exactly(3), length_at_least(3)
    base = event_probability(dist, eq3, ge3)
    if base <= 0:
        raise ConditioningError("P(N=3 | N>=3) is zero under this policy")
    return (
        event_probability(dist, eq3, starts_with("MMM")) / base,
        event_probability(dist, eq3, starts_with("FFF")) / base,
    )


# -- closed forms ---------------------------------------------------------


def _checked(name: str, value: float) -> float:
    if not 0.0 <= value <= 1.0:
        warnings.warn(
            f"{name} = {value!r} lies outside [0, 1]; inputs are not mutually consistent",
            InconsistentInputWarning,
            stacklevel=3,
        )
    return value


def theorem1_probability(sex: SexDistribution, cf: CorrectionFactors) -> float:
    """P(MMM or FFF | N >= 3) from the sex probabilities and correction factors.

    Not clamped: inconsistent inputs may give a value above 1, flagged with
    :class:`InconsistentInputWarning`.
    """
    value = (
        sex.p_M**3 * cf.first_male * cf.second_male
        + sex.p_F**3 * cf.first_female * cf.second_female
    )
    return _checked("theorem1_probability", value)


def corollary1_inflation(sex: SexDistribution, p_S: float, p_D: float) -> float:
    """Inflation over p_M^3 + p_F^3 when only the first-two sex mix drives a third birth."""
    if p_S <= 0:
        raise ZeroDivisionError("inflation factor is undefined for p_S = 0")
    if p_D < 0:
        raise ValueError(f"p_D must be nonnegative, got {p_D}")
    return inflation_from_ratio(sex, p_S / p_D if p_D > 0 else math.inf)


def inflation_from_ratio(sex: SexDistribution, ratio: float) -> float:
    """Inflation factor as a function of p_S/p_D (``inf`` when p_D = 0)."""
    if ratio <= 0:
        raise ZeroDivisionError("inflation factor needs p_S/p_D > 0")
    # 1 / (2 p_M p_F / ratio + p_M^2 + p_F^2), rewritten with p_M + p_F = 1 so ratio 1 gives exactly 1
    return 1.0 / (1.0 - 2.0 * sex.p_M * sex.p_F * (1.0 - 1.0 / ratio))


def corollary1_probability(sex: SexDistribution, p_S: float, p_D: float) -> float:
    return sex.binomial_same3 * corollary1_inflation(sex, p_S, p_D)


def theorem2_probability(sex: SexDistribution, p_S: float, p_D: float) -> float:
    """P(MM? or FF? | N >= 3): first two share a sex, third child's sex ignored."""
    return sex.binomial_same2 * corollary1_inflation(sex, p_S, p_D)


def exactly_three_probability(
    sex: SexDistribution,
    cf: CorrectionFactors,
    third_factor_M: float,
    third_factor_F: float,
) -> float:
    """P(MMM or FFF | N = 3): the N >= 3 terms, each scaled by its fourth-child factor."""
    for name, v in (("third_factor_M", third_factor_M), ("third_factor_F", third_factor_F)):
        if not (v > 0 and math.isfinite(v)):
            raise ValueError(f"{name} must be positive and finite, got {v}")
    value = (
        sex.p_M**3 * cf.first_male * cf.second_male * third_factor_M
        + sex.p_F**3 * cf.first_female * cf.second_female * third_factor_F
    )
    return _checked("exactly_three_probability", value)
