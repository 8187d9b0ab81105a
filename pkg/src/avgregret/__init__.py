"""Average regret ratio minimisation: choose k representative points of a dataset."""

from .core import (
    Dataset,
    DegenerateUtilityError,
    LinearUtility,
    Point,
    Population,
    PreconditionError,
    TabularUtility,
    ValidationError,
    arr_exact_discrete,
    arr_sampled,
    regret_ratio,
    rr_percentiles,
    rr_stddev,
    satisfaction,
    utility_of,
    vrr_sampled,
)
from .distributions import (
    DiscreteDistribution,
    GaussianMixture,
    SampleSet,
    SamplingParams,
    UniformBox,
    draw_samples,
    empirical_bound_check,
    sample_size,
)
from .dp2d import arr_uniform, dp_solve, segment_arr, separating_angle, skyline_2d
from .greedy import greedy_shrink, steepness, verify_lazy_equivalence
from .oracle import brute_force_optimal, recheck

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "DegenerateUtilityError",
    "LinearUtility",
    "Point",
    "Population",
    "PreconditionError",
    "TabularUtility",
    "ValidationError",
    "arr_exact_discrete",
    "arr_sampled",
    "regret_ratio",
    "rr_percentiles",
    "rr_stddev",
    "satisfaction",
    "utility_of",
    "vrr_sampled",
    "DiscreteDistribution",
    "GaussianMixture",
    "SampleSet",
    "SamplingParams",
    "UniformBox",
    "draw_samples",
    "empirical_bound_check",
    "sample_size",
    "arr_uniform",
    "dp_solve",
    "segment_arr",
    "separating_angle",
    "skyline_2d",
    "greedy_shrink",
    "steepness",
    "verify_lazy_equivalence",
    "brute_force_optimal",
    "recheck",
]
