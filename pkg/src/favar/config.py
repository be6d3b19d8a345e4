"""Flat key=value run configuration shared by every command.

A config file is plain text: one ``key = value`` per line, full-line ``#``
comments, blank lines ignored. Every key has a default matching the
baseline model (3 factors, 4 lags, a 0.25 policy shock, 95% bands), so an
empty or absent file is a valid configuration; unknown or duplicate keys
are rejected. All validation happens at load time, before any compute.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

from .errors import ConfigError
from .gibbs import PriorConfig, SamplerConfig
from .irf import UNITS
from .simulate import SimulationConfig

METHODS = ("one-step", "two-step")


@dataclass(frozen=True)
class RunConfig:
    """One fully resolved run configuration."""

    # paths and names
    data: str = ""
    metadata: str = ""
    prepared: str = ""
    out: str = "out"
    policy: str = ""
    # model and sampler
    n_factors: int = 3
    n_lags: int = 4
    n_draws: int = 10000
    n_burn: int = 2000
    thin: int = 5
    seed: int = 0
    n_chains: int = 1
    workers: int = 1
    method: str = "one-step"
    enforce_stationarity: bool = True
    init_cov_scale: float = 10.0
    # priors
    prior_loading_variance: float = 1.0
    prior_idio_shape: float = 3.0
    prior_idio_scale: float = 0.5
    prior_var_coef_variance: float = 1.0
    prior_innovation_df: int | None = None
    prior_innovation_scale: float = 1.0
    # shock and bands
    shock_size: float = 0.25
    horizon: int = 40
    quantile_lower: float = 0.025
    quantile_upper: float = 0.975
    units: str = "native"
    plot_variables: str = ""
    plot_max_panels: int = 12
    # synthetic data generation
    sim_n_series: int = 60
    sim_n_periods: int = 200
    sim_n_factors: int = 3
    sim_n_lags: int = 2
    sim_n_slow: int = 0
    sim_idio_scale: float = 0.5
    sim_spectral_radius: float = 0.7
    sim_loading_scale: float = 0.8
    sim_policy_loading_scale: float = 0.5
    sim_burn_in: int = 200
    sim_start_year: int = 1960

    def __post_init__(self):
        if self.n_factors < 1:
            raise ConfigError("n_factors must be at least 1")
        if self.n_lags < 1:
            raise ConfigError("n_lags must be at least 1")
        if self.n_draws < 1:
            raise ConfigError("n_draws must be positive")
        if not (0 <= self.n_burn < self.n_draws):
            raise ConfigError("n_burn must lie in [0, n_draws)")
        if self.thin < 1:
            raise ConfigError("thin must be at least 1")
        if self.n_chains < 1:
            raise ConfigError("n_chains must be at least 1")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.init_cov_scale <= 0:
            raise ConfigError("init_cov_scale must be positive")
        for key in ("prior_loading_variance", "prior_idio_shape",
                    "prior_idio_scale", "prior_var_coef_variance",
                    "prior_innovation_scale"):
            if getattr(self, key) <= 0:
                raise ConfigError(f"{key} must be positive")
        if self.prior_innovation_df is not None:
            joint = self.n_factors + 1
            if self.prior_innovation_df < joint + 2:
                raise ConfigError(
                    f"prior_innovation_df must be at least {joint + 2} "
                    f"for {self.n_factors} factors"
                )
        if self.shock_size == 0:
            raise ConfigError("shock_size must be nonzero")
        if self.horizon < 1:
            raise ConfigError("horizon must be at least 1")
        if not (0.0 < self.quantile_lower < 0.5 < self.quantile_upper < 1.0):
            raise ConfigError("quantiles must satisfy 0 < lower < 0.5 < upper < 1")
        if self.units not in UNITS:
            raise ConfigError(f"units must be one of {UNITS}, got {self.units!r}")
        if self.plot_max_panels < 1:
            raise ConfigError("plot_max_panels must be at least 1")
        if self.sim_n_slow < 0:
            raise ConfigError("sim_n_slow must be non-negative (0 means half the panel)")
        if self.sim_start_year < 1:
            raise ConfigError("sim_start_year must be positive")
        try:
            self.simulation_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def out_dir(self):
        return Path(self.out)

    def prepared_paths(self):
        """(data CSV, JSON sidecar) for the prepared panel."""
        if self.prepared:
            data = Path(self.prepared)
        else:
            data = self.out_dir() / "prepared_panel.csv"
        return data, data.with_suffix(".json")

    def sampler_config(self, seed=None):
        return SamplerConfig(
            n_factors=self.n_factors,
            n_lags=self.n_lags,
            n_draws=self.n_draws,
            n_burn=self.n_burn,
            thin=self.thin,
            seed=self.seed if seed is None else seed,
            enforce_stationarity=self.enforce_stationarity,
        )

    def prior_config(self):
        return PriorConfig(
            loading_scale=self.prior_loading_variance,
            idio_shape=self.prior_idio_shape,
            idio_scale=self.prior_idio_scale,
            var_coef_scale=self.prior_var_coef_variance,
            innovation_df=self.prior_innovation_df,
            innovation_scale_diag=self.prior_innovation_scale,
            init_cov_scale=self.init_cov_scale,
        )

    def simulation_config(self):
        return SimulationConfig(
            n_series=self.sim_n_series,
            n_periods=self.sim_n_periods,
            n_factors=self.sim_n_factors,
            n_policy=1,
            n_lags=self.sim_n_lags,
            n_slow=self.sim_n_slow or None,
            seed=self.seed,
            burn_in=self.sim_burn_in,
            spectral_radius=self.sim_spectral_radius,
            loading_scale=self.sim_loading_scale,
            policy_loading_scale=self.sim_policy_loading_scale,
            idio_scale=self.sim_idio_scale,
        )

    def quantiles(self):
        return (self.quantile_lower, self.quantile_upper)

    def plot_selection(self, names):
        """Variables to draw: the configured list, or a leading subset.

        With no explicit ``plot_variables`` the policy column plus the first
        panel columns are drawn, capped at ``plot_max_panels`` panels.
        """
        if self.plot_variables:
            return [v.strip() for v in self.plot_variables.split(",") if v.strip()]
        names = list(names)
        if len(names) <= self.plot_max_panels:
            return names
        head = names[: self.plot_max_panels - 1]
        return head + [names[-1]]


def _coerce_bool(raw, key):
    low = raw.lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {raw!r}")


def _coerce(raw, key, kind):
    try:
        if kind is int:
            return int(raw, 10)
        if kind is float:
            return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected {kind.__name__}, got {raw!r}") from None
    if kind is bool:
        return _coerce_bool(raw, key)
    return raw


_FIELD_KINDS = {}
for f in fields(RunConfig):
    if f.name == "prior_innovation_df":
        _FIELD_KINDS[f.name] = "int_or_auto"
    else:
        _FIELD_KINDS[f.name] = type(f.default)


def parse_config_text(text, source="<config>"):
    """Parse config text into a key -> raw string mapping."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _FIELD_KINDS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        if not value:
            raise ConfigError(f"{source}:{lineno}: empty value for {key!r}")
        raw[key] = value
    return raw


def load_config(path=None, overrides=None):
    """Build a validated RunConfig from an optional file plus overrides.

    ``overrides`` maps field names to already-typed values (command-line
    flags); they are applied after the file and validated together with it.
    """
    values = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        raw = parse_config_text(path.read_text(), source=str(path))
        for key, text in raw.items():
            kind = _FIELD_KINDS[key]
            if kind == "int_or_auto":
                values[key] = None if text.lower() == "auto" else _coerce(text, key, int)
            else:
                values[key] = _coerce(text, key, kind)
    cfg = RunConfig(**values)
    if overrides:
        cfg = replace(cfg, **{k: v for k, v in overrides.items() if v is not None})
    return cfg
