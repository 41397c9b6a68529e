"""Selection bias in sibling-sex statistics under a coin-toss model of sex at birth."""
from .estimation import (
    EstimationReport,
    build_report,
    estimate_continuation,
    estimate_correction_factors,
    estimate_sex_distribution,
    observed_same_sex_proportion,
)
from .exact import (
    PatternDistribution,
    corollary1_inflation,
    corollary1_probability,
    correction_factors_from_policy,
    enumerate_distribution,
    event_probability,
    exactly_three_probability,
    theorem1_probability,
    theorem2_probability,
)
from .inference import (
    TestResult,
    chi2_cdf,
    chi2_sf,
    combined_sequence_test,
    proportion_chi2_test,
    sequential_same_sex_tests,
)
from .model import (
    AggregateCounts,
    ConditioningError,
    ContinuationPolicy,
    CorrectionFactors,
    InsufficientDataError,
    SexDistribution,
    pattern_is_same_sex_prefix,
)
from .simulation import SweepConfig, SweepSummary, run_sweep, simulate_dataset

__version__ = "0.1.0"
