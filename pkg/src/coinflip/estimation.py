"""Estimators from completed-family pattern counts.

Sex probabilities use only births at position 2 and later, because first
births are under-reported in the source data. First-child sex still enters
the first correction factors. That mixed usage is deliberate.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

from .exact import theorem1_probability
from .model import (
    AggregateCounts,
    CorrectionFactors,
    InsufficientDataError,
    SexDistribution,
    pattern_is_same_sex_prefix,
)


def _ratio(num: int, den: int, what: str) -> float:
    if den == 0:
        raise InsufficientDataError(f"no data for {what}")
    return num / den


def estimate_sex_distribution(counts: AggregateCounts) -> SexDistribution:
    males = sum(p[1:].count("M") * c for p, c in counts.items())
    births = sum((len(p) - 1) * c for p, c in counts.items())
    return SexDistribution(_ratio(males, births, "births at position 2 or later"))


def _same2(p: str) -> bool:
    return pattern_is_same_sex_prefix(p, 2)


def estimate_continuation(counts: AggregateCounts) -> tuple[float, float, float]:
    """Return (p_S, p_D, P(N>=3 | N>=2)); MM and FF strata are pooled into p_S."""
    same = counts.count_where(_same2)
    same3 = counts.count_where(lambda p: len(p) >= 3 and _same2(p))
    mixed = counts.count_where(lambda p: not _same2(p))
    mixed3 = counts.count_where(lambda p: len(p) >= 3 and not _same2(p))
    p_S = _ratio(same3, same, "same-sex first-two stratum")
    p_D = _ratio(mixed3, mixed, "mixed-sex first-two stratum")
    return p_S, p_D, (same3 + mixed3) / (same + mixed)


def estimate_correction_factors(counts: AggregateCounts) -> CorrectionFactors:
    sex = estimate_sex_distribution(counts)
    n = counts.total
    ge3 = counts.count_where(lambda p: len(p) >= 3)
    p_ge3 = _ratio(ge3, n, "families with 2+ children")

    def first(s: str, p_s: float) -> float:
        if p_s == 0:
            raise InsufficientDataError(f"first correction factor ({s}): estimated p_{s} is zero")
        return counts.count_where(lambda p: p[0] == s) / n / p_s

    def second(prefix: str) -> float:
        stratum = counts.count_where(lambda p: p.startswith(prefix))
        cont = counts.count_where(lambda p: len(p) >= 3 and p.startswith(prefix))
        rate = _ratio(cont, stratum, f"second correction factor ({prefix} stratum)")
        if ge3 == 0:
            raise InsufficientDataError(f"second correction factor ({prefix}): no families with 3+ children")
        return rate / p_ge3

    try:
        return CorrectionFactors(
            first_male=first("M", sex.p_M),
            first_female=first("F", sex.p_F),
            second_male=second("MM"),
            second_female=second("FF"),
        )
    except InsufficientDataError:
        raise
    except ValueError as exc:
        # a zero factor: the stratum exists but never continues
        raise InsufficientDataError(str(exc)) from exc


def observed_same_sex_proportion(counts: AggregateCounts, k: int = 3, condition: str = "ge3") -> float:
    """Share of families in the N>=3 (``"ge3"``) or N=3 (``"eq3"``) stratum whose first k children match."""
    if k not in (2, 3):
        raise ValueError(f"k must be 2 or 3, got {k}")
    if condition == "ge3":
        in_stratum = lambda p: len(p) >= 3  # noqa: E731
    elif condition == "eq3":
        in_stratum = lambda p: len(p) == 3  # noqa: E731
    else:
        raise ValueError(f"condition must be 'ge3' or 'eq3', got {condition!r}")
    stratum = counts.count_where(in_stratum)
    hits = counts.count_where(lambda p: in_stratum(p) and pattern_is_same_sex_prefix(p, k))
    return _ratio(hits, stratum, f"families with N {'>=' if condition == 'ge3' else '='} 3")


@dataclass(frozen=True)
class EstimationReport:
    p_M_hat: float
    p_F_hat: float
    p_S_hat: float
    p_D_hat: float
    cf_hat: CorrectionFactors
    predicted_same3: float
    binomial_same3: float
    inflation_hat: float
    observed_same3: float
    n_families_ge2: int
    n_families_ge3: int

    @classmethod
    def from_components(
        cls,
        sex: SexDistribution,
        cf: CorrectionFactors,
        *,
        p_S: float = float("nan"),
        p_D: float = float("nan"),
        observed_same3: float = float("nan"),
        n_ge2: int = 0,
        n_ge3: int = 0,
    ) -> EstimationReport:
        """Assemble a report from already-estimated pieces (e.g. published proportions)."""
        predicted = theorem1_probability(sex, cf)
        binomial = sex.binomial_same3
        return cls(
            p_M_hat=sex.p_M,
            p_F_hat=sex.p_F,
            p_S_hat=p_S,
            p_D_hat=p_D,
            cf_hat=cf,
            predicted_same3=predicted,
            binomial_same3=binomial,
            inflation_hat=predicted / binomial,
            observed_same3=observed_same3,
            n_families_ge2=n_ge2,
            n_families_ge3=n_ge3,
        )

    def as_rows(self) -> list[tuple[str, float | int]]:
        """Flat key/value rows in the order the CLI prints them."""
        cf = self.cf_hat
        return [
            ("pm_hat", self.p_M_hat),
            ("pf_hat", self.p_F_hat),
            ("ps_hat", self.p_S_hat),
            ("pd_hat", self.p_D_hat),
            ("cf_first_m", cf.first_male),
            ("cf_first_f", cf.first_female),
            ("cf_second_m", cf.second_male),
            ("cf_second_f", cf.second_female),
            ("predicted_same3", self.predicted_same3),
            ("binomial_same3", self.binomial_same3),
            ("inflation_hat", self.inflation_hat),
            ("observed_same3", self.observed_same3),
            ("n_ge2", self.n_families_ge2),
            ("n_ge3", self.n_families_ge3),
        ]

    def to_dict(self) -> dict:
        return asdict(self)


def build_report(counts: AggregateCounts) -> EstimationReport:
    if counts.total == 0:
        raise InsufficientDataError("no families in counts")
    sex = estimate_sex_distribution(counts)
    p_S, p_D, _ = estimate_continuation(counts)
    return EstimationReport.from_components(
        sex,
        estimate_correction_factors(counts),
        p_S=p_S,
        p_D=p_D,
        observed_same3=observed_same_sex_proportion(counts, 3, "ge3"),
        n_ge2=counts.total,
        n_ge3=counts.count_where(lambda p: len(p) >= 3),
    )
