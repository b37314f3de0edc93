"""Column subset selection from a covariance matrix."""

from ._csskit import (
    CsskitError,
    choose_k,
    critical_value,
    evaluate,
    exhaustive,
    greedy,
    num_threads,
    pairwise_cov,
    population_cov,
    psd_project,
    pseudo_inverse,
    residual_covariance,
    sample_cov,
    sample_scenario,
    set_num_threads,
    stat_t,
    stat_t_tilde,
    swap,
    to_correlation,
)

__all__ = [
    "CsskitError",
    "choose_k",
    "critical_value",
    "evaluate",
    "exhaustive",
    "greedy",
    "num_threads",
    "pairwise_cov",
    "population_cov",
    "psd_project",
    "pseudo_inverse",
    "residual_covariance",
    "sample_cov",
    "sample_scenario",
    "set_num_threads",
    "stat_t",
    "stat_t_tilde",
    "swap",
    "to_correlation",
]
