"""Variable-index Besov priors, spectral forward maps and Bayesian inversion.

Coefficient vectors are flat numpy arrays of length 2**(J + 1) ordered
[F, M_0, M_1 (2 entries), ..., M_J (2**J entries)].  Functions taking "u"
coefficients expect inner products with the basis; "lambda" coefficients are
2**(j/2) u.
"""

from ._core import (
    ConfigError,
    ExponentField,
    ForwardModel,
    HoelderBudget,
    Posterior,
    PriorModel,
    PriorSpec,
    WaveletFamily,
    analyze,
    convert,
    empirical_hoelder_exponent,
    estimate_z,
    fernique_exp_moment,
    gap_condition,
    hellinger,
    hoelder_condition,
    luxemburg_norm,
    map_objective,
    mittag_leffler,
    modular_value,
    observe_coefficients,
    prior_modular_mean,
    propagate,
    read_coefficients,
    regularity_threshold,
    run_mcmc,
    run_subcommand,
    sample_xi,
    simulate_data,
    smoothing_sup,
    solve_map,
    subcommand_names,
    synthesize,
    truncation_study,
    validate_config,
)

__version__ = "0.1.0"


def equispaced(count, offset=0.5):
    """Observation points (i + offset) / count."""
    return [(i + offset) / count for i in range(count)]
