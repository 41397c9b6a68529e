"""Generative model: i.i.d. sex at birth plus a history-dependent stopping rule.

Sex patterns are plain strings over ``"MF"``. A pattern is read either as a
prefix event (the first ``len(p)`` children) or, inside :class:`AggregateCounts`,
as a completed family whose length is the number of children ``N``.
"""
from __future__ import annotations

import math
from collections.abc import Callable, Iterator, Mapping
from dataclasses import dataclass, field
from itertools import product
from types import MappingProxyType

SEXES = "MF"
DEFAULT_MAX_CHILDREN = 5


class InsufficientDataError(ValueError):
    """A stratum or denominator needed by an estimator is empty."""


class ConditioningError(ZeroDivisionError):
    """Conditioning on an event of probability zero."""


def validate_pattern(pattern: str) -> str:
    bad = set(pattern) - set(SEXES)
    if bad:
        raise ValueError(f"pattern {pattern!r} has symbols outside {{M, F}}: {sorted(bad)}")
    return pattern


def all_patterns(length: int) -> Iterator[str]:
    """Every sex pattern of exactly ``length`` children, in lexicographic M<F order."""
    for letters in product(SEXES, repeat=length):
        yield "".join(letters)


def pattern_is_same_sex_prefix(pattern: str, k: int) -> bool:
    """True iff the first ``k`` children of ``pattern`` share a sex."""
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    if len(pattern) < k:
        raise ValueError(f"pattern {pattern!r} is shorter than k={k}")
    return len(set(pattern[:k])) == 1


def swap_sexes(pattern: str) -> str:
    return pattern.translate(str.maketrans("MF", "FM"))


def _check_prob(name: str, value: float) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0 or math.isnan(value):
        raise ValueError(f"{name} must lie in [0, 1], got {value}")
    return value


@dataclass(frozen=True)
class SexDistribution:
    """Probability of a male birth; ``p_F`` defaults to ``1 - p_M``."""

    p_M: float
    p_F: float | None = None

    def __post_init__(self):
        p_M = _check_prob("p_M", self.p_M)
        p_F = 1.0 - p_M if self.p_F is None else _check_prob("p_F", self.p_F)
        if abs(p_M + p_F - 1.0) > 1e-15:
            raise ValueError(f"p_M + p_F must equal 1, got {p_M} + {p_F}")
        object.__setattr__(self, "p_M", p_M)
        object.__setattr__(self, "p_F", p_F)

    def prob(self, sex: str) -> float:
        if sex == "M":
            return self.p_M
        if sex == "F":
            return self.p_F
        raise ValueError(f"unknown sex symbol {sex!r}")

    def swapped(self) -> SexDistribution:
        return SexDistribution(self.p_F, self.p_M)

    @property
    def binomial_same3(self) -> float:
        """P(first three share a sex) with no selection: p_M^3 + p_F^3."""
        return self.p_M**3 + self.p_F**3

    @property
    def binomial_same2(self) -> float:
        return self.p_M**2 + self.p_F**2


@dataclass(frozen=True)
class ContinuationPolicy:
    """Probability of having another child given the sexes of the children so far.

    ``rule`` is only consulted for nonempty prefixes shorter than
    ``max_children``; at or beyond the cap the continuation probability is 0.
    Build instances with :meth:`constant`, :meth:`mixed_preference` or
    :meth:`table` rather than passing an arbitrary callable.
    """

    max_children: int
    rule: Callable[[str], float] = field(compare=False)
    description: str = ""

    def __post_init__(self):
        if int(self.max_children) != self.max_children or self.max_children < 1:
            raise ValueError(f"max_children must be a positive integer, got {self.max_children}")

    def __call__(self, prefix: str) -> float:
        if not prefix:
            raise ValueError("continuation is only defined after at least one child")
        validate_pattern(prefix)
        if len(prefix) >= self.max_children:
            return 0.0
        return _check_prob(f"continuation after {prefix!r}", self.rule(prefix))

    def prefixes(self) -> Iterator[str]:
        """All prefixes on which the rule can be nonzero (lengths 1..max_children-1)."""
        for n in range(1, self.max_children):
            yield from all_patterns(n)

    def as_table(self) -> dict[str, float]:
        return {p: self(p) for p in self.prefixes()}

    def swapped(self) -> ContinuationPolicy:
        """The same policy with the sex labels exchanged."""
        return ContinuationPolicy(
            self.max_children,
            lambda prefix: self(swap_sexes(prefix)),
            f"swapped({self.description})",
        )

    @classmethod
    def constant(cls, q: float, max_children: int = DEFAULT_MAX_CHILDREN) -> ContinuationPolicy:
        """History-independent continuation: the binomial null."""
        q = _check_prob("q", q)
        return cls(max_children, lambda prefix: q, f"constant({q})")

    @classmethod
    def mixed_preference(
        cls,
        q1: float,
        p_S: float,
        p_D: float,
        tail: float | tuple[float, float] | Mapping[int, tuple[float, float]] = 0.0,
        max_children: int = DEFAULT_MAX_CHILDREN,
    ) -> ContinuationPolicy:
        """Second child with probability ``q1``; third with ``p_S``/``p_D``.

        ``tail`` governs parities 3 and up. A scalar applies to every family;
        a ``(same, mixed)`` pair splits on whether all children so far share
        a sex; a mapping keyed by parity gives one pair per parity (missing
        parities stop).
        """
        q1 = _check_prob("q1", q1)
        p_S = _check_prob("p_S", p_S)
        p_D = _check_prob("p_D", p_D)
        if isinstance(tail, Mapping):
            tails = {int(k): (_check_prob("tail", s), _check_prob("tail", d)) for k, (s, d) in tail.items()}
        elif isinstance(tail, tuple):
            pair = (_check_prob("tail", tail[0]), _check_prob("tail", tail[1]))
            tails = {k: pair for k in range(3, max_children)}
        else:
            t = _check_prob("tail", tail)
            tails = {k: (t, t) for k in range(3, max_children)}

        def rule(prefix: str) -> float:
            n = len(prefix)
            if n == 1:
                return q1
            same = len(set(prefix)) == 1
            if n == 2:
                return p_S if same else p_D
            s, d = tails.get(n, (0.0, 0.0))
            return s if same else d

        return cls(max_children, rule, f"mixed_preference({q1}, {p_S}, {p_D}, {tail!r})")

    @classmethod
    def table(cls, probs: Mapping[str, float], max_children: int | None = None) -> ContinuationPolicy:
        """Explicit per-prefix continuation probabilities.

        The table must cover every prefix of length 1..max_children-1;
        ``max_children`` defaults to one more than the longest listed prefix.
        """
        probs = {validate_pattern(k): _check_prob(f"table[{k!r}]", v) for k, v in probs.items()}
        if not probs:
            raise ValueError("empty continuation table")
        if max_children is None:
            max_children = max(map(len, probs)) + 1
        missing = [p for n in range(1, max_children) for p in all_patterns(n) if p not in probs]
        if missing:
            raise ValueError(f"continuation table is missing prefixes: {missing[:5]}")
        frozen = MappingProxyType(dict(probs))
        return cls(max_children, frozen.__getitem__, "table")


@dataclass(frozen=True)
class CorrectionFactors:
    """The four multiplicative factors relating P(MMM or FFF | N>=3) to p^3.

    ``first_*`` is P(N>=2 | first child of that sex) / P(N>=2);
    ``second_*`` is P(N>=3 | N>=2, first two of that sex) / P(N>=3 | N>=2).
    """

    first_male: float
    first_female: float
    second_male: float
    second_female: float

    def __post_init__(self):
        for name in ("first_male", "first_female", "second_male", "second_female"):
            v = float(getattr(self, name))
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"correction factor {name} must be positive and finite, got {v}")
            object.__setattr__(self, name, v)

    @classmethod
    def ones(cls) -> CorrectionFactors:
        return cls(1.0, 1.0, 1.0, 1.0)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.first_male, self.first_female, self.second_male, self.second_female)


class AggregateCounts(Mapping[str, int]):
    """Number of families per completed sex pattern (families with 2+ children)."""

    def __init__(self, counts: Mapping[str, int] | None = None):
        data: dict[str, int] = {}
        for pattern, count in (counts or {}).items():
            validate_pattern(pattern)
            if len(pattern) < 2:
                raise ValueError(f"pattern {pattern!r}: completed families need at least 2 children")
            if int(count) != count or count < 0:
                raise ValueError(f"count for {pattern!r} must be a nonnegative integer, got {count!r}")
            data[pattern] = int(count)
        self._data = data

    def __getitem__(self, pattern: str) -> int:
        return self._data[pattern]

    def __iter__(self) -> Iterator[str]:
        return iter(self._data)

    def __len__(self) -> int:
        return len(self._data)

    def __repr__(self) -> str:
        return f"AggregateCounts({self._data!r})"

    @property
    def total(self) -> int:
        return sum(self._data.values())

    @property
    def max_length(self) -> int:
        return max((len(p) for p in self._data), default=0)

    def count_where(self, predicate: Callable[[str], bool]) -> int:
        return sum(c for p, c in self._data.items() if predicate(p))

    def scaled(self, factor: int) -> AggregateCounts:
        return AggregateCounts({p: c * factor for p, c in self._data.items()})

    def swapped(self) -> AggregateCounts:
        return AggregateCounts({swap_sexes(p): c for p, c in self._data.items()})
