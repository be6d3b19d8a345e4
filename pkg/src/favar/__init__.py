"""Bayesian factor-augmented VAR estimation on large quarterly panels."""

from .config import RunConfig, load_config
from .errors import ConfigError, DataError, FavarError, NumericalError
from .gibbs import (
    GibbsResult,
    PriorConfig,
    SamplerConfig,
    convergence_report,
    geweke_z,
    run_chains,
    run_gibbs,
)
from .irf import (
    IrfSummary,
    convert_irf_units,
    coverage_fraction,
    impulse_response,
    posterior_irfs,
    shock_vector,
    state_responses,
    summarize_irfs,
)
from .panel import (
    AdfResult,
    Panel,
    RawSeries,
    VariableMeta,
    adf_test,
    apply_tcode,
    deseasonalize,
    invert_tcode,
    load_panel,
    prepare_panel,
    quadratic_interpolate,
    read_prepared_panel,
    standardize,
    write_prepared_panel,
)
from .params import FavarParams
from .pca import (
    PcaResult,
    initial_factors,
    pca_factors,
    purge_policy_from_factors,
    two_step_estimate,
)
from .persist import read_chain, read_irf_csv, write_chain, write_irf_csv
from .plots import plot_irf_grid, plot_sweep_grid
from .simulate import SimulationConfig, make_stable_var, simulate_favar, trace_r2
from .state_space import (
    StateSpaceForm,
    build_collapsed_state_space,
    build_state_space,
    carter_kohn,
    collapse_panel,
    kalman_filter,
    kalman_smoother,
    sample_favar_states,
)

__version__ = "0.1.0"

__all__ = [
    "AdfResult",
    "ConfigError",
    "DataError",
    "FavarError",
    "FavarParams",
    "GibbsResult",
    "IrfSummary",
    "NumericalError",
    "Panel",
    "PcaResult",
    "PriorConfig",
    "RawSeries",
    "RunConfig",
    "SamplerConfig",
    "SimulationConfig",
    "StateSpaceForm",
    "VariableMeta",
    "adf_test",
    "apply_tcode",
    "build_collapsed_state_space",
    "build_state_space",
    "carter_kohn",
    "collapse_panel",
    "convergence_report",
    "convert_irf_units",
    "coverage_fraction",
    "deseasonalize",
    "geweke_z",
    "impulse_response",
    "initial_factors",
    "invert_tcode",
    "kalman_filter",
    "kalman_smoother",
    "load_config",
    "load_panel",
    "make_stable_var",
    "pca_factors",
    "plot_irf_grid",
    "plot_sweep_grid",
    "posterior_irfs",
    "prepare_panel",
    "purge_policy_from_factors",
    "quadratic_interpolate",
    "read_chain",
    "read_irf_csv",
    "read_prepared_panel",
    "run_chains",
    "run_gibbs",
    "sample_favar_states",
    "shock_vector",
    "simulate_favar",
    "standardize",
    "state_responses",
    "summarize_irfs",
    "trace_r2",
    "two_step_estimate",
    "write_chain",
    "write_irf_csv",
    "write_prepared_panel",
    "__version__",
]
