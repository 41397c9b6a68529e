"""Seeded Monte Carlo sweep over the p_S/p_D ratio.

Each (ratio index, replicate) cell draws from its own generator, seeded by
``SeedSequence(master_seed, spawn_key=(ratio_index, rep))``. Cells can
therefore run in any order on any number of threads and still give
bit-identical summaries.
"""
from __future__ import annotations

import math
import os
import warnings
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .exact import corollary1_probability, enumerate_distribution
from .model import AggregateCounts, ContinuationPolicy, SexDistribution

THREADS_ENV = "COINFLIP_THREADS"


@dataclass(frozen=True)
class DatasetResult:
    same3_count: int
    ge3_count: int

    @property
    def empty(self) -> bool:
        return self.ge3_count == 0

    @property
    def proportion(self) -> float:
        """Share of N>=3 families whose first three match; NaN when no family reached 3."""
        return self.same3_count / self.ge3_count if self.ge3_count else math.nan


def cell_seed(master_seed: int, ratio_index: int, rep: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(master_seed, spawn_key=(ratio_index, rep))


def simulate_dataset(
    sex: SexDistribution,
    p_S: float,
    p_D: float,
    n_families: int,
    seed: int | np.random.SeedSequence,
) -> DatasetResult:
    """Simulate ``n_families`` families with at least two children, up to the third child."""
    for name, v in (("p_S", p_S), ("p_D", p_D)):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1], got {v}")
    if n_families < 1:
        raise ValueError("n_families must be at least 1")
    rng = np.random.default_rng(seed)
    u = rng.random((4, n_families))
    first = u[0] < sex.p_M
    second = u[1] < sex.p_M
    same = first == second
    third = u[2] < np.where(same, p_S, p_D)
    third_sex = u[3] < sex.p_M
    same3 = same & third & (third_sex == first)
    return DatasetResult(int(np.count_nonzero(same3)), int(np.count_nonzero(third)))


def sample_counts(
    sex: SexDistribution,
    policy: ContinuationPolicy,
    n_families: int,
    seed: int | np.random.SeedSequence,
) -> AggregateCounts:
    """Draw completed-family counts for ``n_families`` families with 2+ children.

    Draws a multinomial over the exact pattern law conditioned on N >= 2,
    so any policy and family size up to ``policy.max_children`` is supported.
    """
    dist = enumerate_distribution(sex, policy)
    patterns = sorted(p for p in dist if len(p) >= 2)
    probs = np.array([dist[p] for p in patterns])
    total = probs.sum()
    if total <= 0:
        raise ValueError("policy never produces a second child")
    rng = np.random.default_rng(seed)
    draws = rng.multinomial(n_families, probs / total)
    return AggregateCounts({p: int(c) for p, c in zip(patterns, draws) if c})


def nearest_rank(sorted_values: Sequence[float], pct: float) -> float:
    """Nearest-rank percentile: the ceil(pct/100 * n)-th smallest value (1-based)."""
    n = len(sorted_values)
    if n == 0:
        return math.nan
    rank = max(1, math.ceil(pct / 100.0 * n))
    return sorted_values[min(rank, n) - 1]


@dataclass(frozen=True)
class SweepConfig:
    sex: SexDistribution = field(default_factory=lambda: SexDistribution(0.5164))
    p_D: float = 0.354
    ratio_grid: tuple[float, ...] = tuple(np.linspace(1.0, 1.5, 100).tolist())
    reps: int = 1000
    n_families: int = 58_007
    master_seed: int = 0
    band: tuple[float, float] = (5.0, 95.0)

    def __post_init__(self):
        grid = tuple(float(r) for r in self.ratio_grid)
        object.__setattr__(self, "ratio_grid", grid)
        if not grid:
            raise ValueError("ratio grid is empty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("ratio grid must be strictly increasing")
        if grid[0] < 0 or self.p_D * grid[-1] > 1.0:
            raise ValueError("every ratio must be >= 0 with p_D * ratio <= 1")
        if not 0.0 <= self.p_D <= 1.0:
            raise ValueError(f"p_D must lie in [0, 1], got {self.p_D}")
        if self.reps < 1 or self.n_families < 1:
            raise ValueError("reps and n_families must be positive")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be an unsigned 64-bit integer")
        lo, hi = self.band
        if not 0 <= lo <= hi <= 100:
            raise ValueError(f"invalid percentile band {self.band}")

    @staticmethod
    def grid(ratio_min: float, ratio_max: float, points: int) -> tuple[float, ...]:
        if points == 1:
            return (float(ratio_min),)
        return tuple(np.linspace(ratio_min, ratio_max, points).tolist())


@dataclass(frozen=True)
class SweepPoint:
    ratio: float
    mean_prop: float
    band_low: float
    band_high: float
    theory: float
    n_effective_mean: float
    n_excluded: int = 0


@dataclass(frozen=True)
class SweepSummary:
    config: SweepConfig
    points: tuple[SweepPoint, ...]
    raw: tuple[tuple[DatasetResult, ...], ...] = field(repr=False, default=())

    @property
    def n_excluded(self) -> int:
        return sum(p.n_excluded for p in self.points)


def _theory(config: SweepConfig, ratio: float) -> float:
    try:
        return corollary1_probability(config.sex, ratio * config.p_D, config.p_D)
    except ZeroDivisionError:
        return math.nan


def summarize_point(config: SweepConfig, ratio: float, cells: Sequence[DatasetResult]) -> SweepPoint:
    kept = [c for c in cells if not c.empty]
    props = sorted(c.proportion for c in kept)
    lo, hi = config.band
    n = len(props)
    return SweepPoint(
        ratio=ratio,
        mean_prop=math.fsum(props) / n if n else math.nan,
        band_low=nearest_rank(props, lo),
        band_high=nearest_rank(props, hi),
        theory=_theory(config, ratio),
        n_effective_mean=math.fsum(c.ge3_count for c in kept) / n if n else math.nan,
        n_excluded=len(cells) - n,
    )


def _run_point(config: SweepConfig, i: int) -> tuple[DatasetResult, ...]:
    p_S = config.ratio_grid[i] * config.p_D
    return tuple(
        simulate_dataset(config.sex, p_S, config.p_D, config.n_families, cell_seed(config.master_seed, i, r))
        for r in range(config.reps)
    )


def default_threads() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        n = int(env)
        if n < 1:
            raise ValueError(f"{THREADS_ENV} must be a positive integer, got {env!r}")
        return n
    return os.cpu_count() or 1


def run_sweep(config: SweepConfig, threads: int | None = None, keep_raw: bool = False) -> SweepSummary:
    """Run every (ratio, replicate) cell and summarize each grid point."""
    threads = threads or default_threads()
    indices = range(len(config.ratio_grid))
    if threads == 1:
        cells = {i: _run_point(config, i) for i in indices}
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            cells = dict(zip(indices, pool.map(lambda i: _run_point(config, i), indices)))
    points = tuple(summarize_point(config, config.ratio_grid[i], cells[i]) for i in indices)
    summary = SweepSummary(config, points, tuple(cells[i] for i in indices) if keep_raw else ())
    if summary.n_excluded:
        warnings.warn(f"{summary.n_excluded} simulated datasets had no family with 3+ children and were excluded")
    return summary
