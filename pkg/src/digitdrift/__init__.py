"""Exact distributions of the base-b digit-sum drift, their simulation on
lazily sampled digit strings, and normal-approximation diagnostics, all
cross-checked by brute-force counting."""

from .digits import (
    Block,
    BlockDecomposition,
    BlockKind,
    Expansion,
    block_prefix_integers,
    carry_count,
    decompose_blocks,
    digit_sum,
    drift,
    expand,
    int_digit_sum,
    reverse_expansion,
    rho_lambda,
)
from .exactdist import (
    DriftDistribution,
    Rational,
    VarianceReport,
    atom_mass,
    check_variance_bounds,
    distribution,
    mean_interval,
    second_moment_interval,
    std_dev,
    unit_atom_mass,
    variance_exact,
    variance_range,
    variance_single_block,
    variance_trailing_max_run,
    variance_trailing_unit,
)
from .odometer import (
    DriftSample,
    LazyBadicSample,
    advance,
    drift_samples,
    sample_drift,
    truncated_drift,
)
from .mixing import (
    MixingProcessSample,
    PhiEstimate,
    estimate_phi,
    moment_check,
    phi_bound,
    phi_half_sums,
    sample_process,
)
from .cltdiag import (
    RateReport,
    RateRow,
    ks_distance,
    local_limit_gap,
    mollifier,
    mollifier_profile,
    normal_cdf,
    rate_report,
    smooth_gap,
)
from .oracle import (
    cesaro_check,
    empirical_density,
    tower_enclosure,
)

__version__ = "0.1.0"

__all__ = [
    "Block",
    "BlockDecomposition",
    "BlockKind",
    "DriftDistribution",
    "DriftSample",
    "Expansion",
    "LazyBadicSample",
    "MixingProcessSample",
    "PhiEstimate",
    "RateReport",
    "RateRow",
    "Rational",
    "VarianceReport",
    "advance",
    "atom_mass",
    "block_prefix_integers",
    "carry_count",
    "cesaro_check",
    "check_variance_bounds",
    "decompose_blocks",
    "digit_sum",
    "distribution",
    "drift",
    "drift_samples",
    "empirical_density",
    "estimate_phi",
    "expand",
    "int_digit_sum",
    "ks_distance",
    "local_limit_gap",
    "mean_interval",
    "moment_check",
    "mollifier",
    "mollifier_profile",
    "normal_cdf",
    "phi_bound",
    "phi_half_sums",
    "rate_report",
    "reverse_expansion",
    "rho_lambda",
    "sample_drift",
    "sample_process",
    "second_moment_interval",
    "smooth_gap",
    "std_dev",
    "tower_enclosure",
    "truncated_drift",
    "unit_atom_mass",
    "variance_exact",
    "variance_range",
    "variance_single_block",
    "variance_trailing_max_run",
    "variance_trailing_unit",
]
