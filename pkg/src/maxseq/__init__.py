"""maxseq: max-type high-dimensional unit-root and residual white-noise tests
with a deterministic Monte Carlo verification harness."""

from .core import (
    DEFAULT_RULE,
    LagRule,
    PanelData,
    RngSeed,
    bounded_max_transform,
    indexed_map,
    lag_sequence,
    running_max_abs,
)
from .dgp import (
    ArpSpec,
    ErrorSpec,
    PanelSpec,
    ar1_population_moments,
    simulate_ar1_panel,
    simulate_arp,
    simulate_errors,
)
from .estimate import (
    ArFit,
    VariancePair,
    ar_design,
    default_bandwidth,
    long_run_variance,
    ols_ar1_no_intercept,
    ols_arp,
    residual_autocorr,
    variance_pair,
)
from .mcharness import (
    McReport,
    McRow,
    PAIR_SELECTORS,
    calibrate_Ln,
    size_power_experiment,
    verify_expansion,
    verify_max_coupling,
)
from .unitroot import (
    LimitLawSample,
    UnitRootMaxTest,
    UnitRootResult,
    simulate_limit_law,
    t_stat_adjusted,
    t_stat_raw,
    unit_root_test,
)
from .validation import ValidationError
from .whitenoise import (
    ExpansionComponents,
    KernelMatrix,
    WhiteNoiseMaxTest,
    WnTestResult,
    dwb_pvalue,
    estimate_z_kernel,
    expansion_gap,
    expansion_terms,
    gaussian_kernel_pvalue,
    max_corr_stat,
    oracle_corr_stats,
)

__version__ = "0.1.0"

__all__ = [
    "ArFit",
    "ArpSpec",
    "DEFAULT_RULE",
    "ErrorSpec",
    "ExpansionComponents",
    "KernelMatrix",
    "LagRule",
    "LimitLawSample",
    "McReport",
    "McRow",
    "PAIR_SELECTORS",
    "PanelData",
    "PanelSpec",
    "RngSeed",
    "UnitRootMaxTest",
    "UnitRootResult",
    "ValidationError",
    "VariancePair",
    "WhiteNoiseMaxTest",
    "WnTestResult",
    "ar1_population_moments",
    "ar_design",
    "bounded_max_transform",
    "calibrate_Ln",
    "default_bandwidth",
    "dwb_pvalue",
    "estimate_z_kernel",
    "expansion_gap",
    "expansion_terms",
    "gaussian_kernel_pvalue",
    "indexed_map",
    "lag_sequence",
    "long_run_variance",
    "max_corr_stat",
    "ols_ar1_no_intercept",
    "ols_arp",
    "oracle_corr_stats",
    "residual_autocorr",
    "running_max_abs",
    "simulate_ar1_panel",
    "simulate_arp",
    "simulate_errors",
    "simulate_limit_law",
    "size_power_experiment",
    "t_stat_adjusted",
    "t_stat_raw",
    "unit_root_test",
    "variance_pair",
    "verify_expansion",
    "verify_max_coupling",
]
