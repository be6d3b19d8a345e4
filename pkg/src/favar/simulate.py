"""Synthetic data generation from the factor-augmented VAR, plus recovery
metrics.

The simulator draws a stable joint VAR for [factors; policy], builds an
observation panel satisfying the identification scheme exactly, and can
restate both data and true parameters on the standardized scale used by
estimation, so sampler output is directly comparable to the truth.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from ._atomic import atomic_write_text
from .params import FavarParams


@dataclass(frozen=True)
class SimulationConfig:
    """Knobs for one synthetic panel draw."""

    n_series: int = 60
    n_periods: int = 200
    n_factors: int = 3
    n_policy: int = 1
    n_lags: int = 2
    n_slow: int | None = None
    seed: int = 0
    burn_in: int = 200
    spectral_radius: float = 0.7
    loading_scale: float = 0.8
    policy_loading_scale: float = 0.5
    idio_scale: float = 0.5

    def __post_init__(self):
        if self.n_factors < 1 or self.n_policy < 1 or self.n_lags < 1:
            raise ValueError("n_factors, n_policy and n_lags must be positive")
        if self.n_series < self.n_factors + 1:
            raise ValueError("need more series than factors")
        if self.n_periods < 30:
            raise ValueError("n_periods must be at least 30")
        ns = self.resolved_n_slow()
        if not (self.n_factors <= ns <= self.n_series):
            raise ValueError("n_slow must lie in [n_factors, n_series]")
        if not (0.0 < self.spectral_radius < 1.0):
            raise ValueError("spectral_radius must be in (0, 1)")

    def resolved_n_slow(self):
        return self.n_series // 2 if self.n_slow is None else self.n_slow


@dataclass(frozen=True)
class SimulatedFavar:
    """A synthetic panel together with the parameters that generated it."""

    observations: np.ndarray  # T x N informational series
    policy: np.ndarray  # T x M
    factors: np.ndarray  # T x K
    innovations: np.ndarray  # T x (K+M) joint VAR innovations
    noise: np.ndarray  # T x N idiosyncratic observation noise
    params: FavarParams
    config: SimulationConfig

    def standardized(self):
        """Restate data and truth on the standardized scale.

        Columns of the observation panel are scaled to mean 0 / stddev 1
        (ddof=1) and the policy is demeaned. The returned parameters are the
        exact images of the true ones under that affine change of variables,
        so they satisfy identification on the new scale: with
        D = diag(s_1..s_K, 1_M), factor k maps to (F_k - mean(X_k)) / s_k,
        lag matrices to D^-1 A_j D, the innovation covariance to
        D^-1 Sigma D^-1, loadings row i to lambda_ik s_k / s_i, and
        idiosyncratic variances to sigma_i^2 / s_i^2. The VAR intercept
        induced by centering is of order 1/sqrt(T) and is dropped, matching
        the intercept-free model.

        Returns
        -------
        (observations, policy, factors, params, records)
            ``records`` lists per-column ``(mean, stddev)`` with the policy
            columns carrying stddev 1.0.
        """
        X = self.observations
        Y = self.policy
        K = self.config.n_factors
        M = self.config.n_policy
        means = X.mean(axis=0)
        sds = X.std(axis=0, ddof=1)
        Xs = (X - means) / sds
        y_means = Y.mean(axis=0)
        Ys = Y - y_means

        d_state = np.concatenate([sds[:K], np.ones(M)])
        Fs = (self.factors - means[:K]) / sds[:K]

        p = self.params
        joint = K + M
        d_inv = 1.0 / d_state
        lag_mats = [d_inv[:, None] * A * d_state[None, :] for A in p.lag_matrices()]
        var_coefs = np.concatenate(lag_mats, axis=1)
        innovation_cov = d_inv[:, None] * p.innovation_cov * d_inv[None, :]
        loadings_f = p.loadings_f * sds[None, :K] / sds[:, None]
        loadings_y = p.loadings_y / sds[:, None]
        idio_var = p.idio_var / sds**2
        params = FavarParams(
            loadings_f=loadings_f,
            loadings_y=loadings_y,
            var_coefs=var_coefs,
            innovation_cov=innovation_cov,
            idio_var=idio_var,
        )
        params.validate(n_slow=self.config.resolved_n_slow(), atol=1e-9)
        records = [(float(m), float(s)) for m, s in zip(means, sds)]
        records += [(float(m), 1.0) for m in y_means]
        return Xs, Ys, Fs, params, records

    def write_raw_csv(self, data_path, meta_path, start_year=1960):
        """Write the panel in the raw input format consumed by loading.

        All series are written as levels (tcode 1) on a quarterly grid, the
        first ``n_slow`` informational series flagged slow, the rest fast,
        and the policy column(s) named ``policy`` (suffixed when M > 1).
        """
        T, N = self.observations.shape
        M = self.policy.shape[1]
        names = [f"series_{i + 1:03d}" for i in range(N)]
        pol_names = ["policy"] if M == 1 else [f"policy_{j + 1}" for j in range(M)]
        n_slow = self.config.resolved_n_slow()
        dates = []
        y, q = start_year, 1
        for _ in range(T):
            dates.append(f"{y}Q{q}")
            y, q = (y + 1, 1) if q == 4 else (y, q + 1)
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["date", *names, *pol_names])
        for t in range(T):
            row = [dates[t]]
            row += [format(float(v), ".17g") for v in self.observations[t]]
            row += [format(float(v), ".17g") for v in self.policy[t]]
            writer.writerow(row)
        atomic_write_text(data_path, out.getvalue())
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["name", "tcode", "speed", "interpolation", "seasonal", "native_frequency"])
        for i, n in enumerate(names):
            speed = "slow" if i < n_slow else "fast"
            writer.writerow([n, 1, speed, "none", "false", "quarterly"])
        for pn in pol_names:
            writer.writerow([pn, 1, "fast", "none", "false", "quarterly"])
        atomic_write_text(meta_path, out.getvalue())
        return pol_names[0]


def make_stable_var(n_vars, n_lags, rng, spectral_radius=0.7, scale=0.3):
    """Draw random VAR coefficients rescaled to an exact spectral radius.

    Scaling lag matrix A_j by c^j multiplies every companion eigenvalue by
    c, so one rescale lands exactly on the target radius.
    """
    coefs = [scale * rng.standard_normal((n_vars, n_vars)) / np.sqrt(n_vars) for _ in range(n_lags)]
    S = n_vars * n_lags
    comp = np.zeros((S, S))
    comp[:n_vars, :] = np.concatenate(coefs, axis=1)
    if n_lags > 1:
        comp[n_vars:, : n_vars * (n_lags - 1)] = np.eye(n_vars * (n_lags - 1))
    radius = float(np.max(np.abs(np.linalg.eigvals(comp))))
    if radius == 0.0:
        raise ValueError("degenerate zero coefficient draw")
    c = spectral_radius / radius
    coefs = [(c ** (j + 1)) * A for j, A in enumerate(coefs)]
    return np.concatenate(coefs, axis=1)


def random_spd(dim, rng, scale=1.0):
    """Random symmetric positive definite matrix with bounded conditioning."""
    A = rng.standard_normal((dim, dim + 2))
    S = A @ A.T / (dim + 2)
    return scale * (S + 0.1 * np.eye(dim))


def simulate_favar(config):
    """Draw a synthetic panel from the model.

    The true parameters satisfy identification exactly: the first
    ``n_factors`` informational series load one-to-one on the factors with
    no policy exposure, the remaining slow series carry free factor loadings
    but zero policy loadings, and fast series load on both.
    """
    cfg = config
    rng = np.random.default_rng(cfg.seed)
    K, M, d = cfg.n_factors, cfg.n_policy, cfg.n_lags
    N = cfg.n_series
    n_slow = cfg.resolved_n_slow()
    joint = K + M

    var_coefs = make_stable_var(joint, d, rng, spectral_radius=cfg.spectral_radius)
    innovation_cov = random_spd(joint, rng, scale=0.5)

    loadings_f = cfg.loading_scale * rng.standard_normal((N, K))
    loadings_f[:K, :K] = np.eye(K)
    loadings_y = cfg.policy_loading_scale * rng.standard_normal((N, M))
    loadings_y[:n_slow] = 0.0
    idio_var = cfg.idio_scale * (0.2 + rng.random(N))

    params = FavarParams(
        loadings_f=loadings_f,
        loadings_y=loadings_y,
        var_coefs=var_coefs,
        innovation_cov=innovation_cov,
        idio_var=idio_var,
    )
    params.validate(n_slow=n_slow)

    chol = np.linalg.cholesky(innovation_cov)
    total = cfg.burn_in + cfg.n_periods
    z = np.zeros((total, joint))
    lag_mats = params.lag_matrices()
    innov = rng.standard_normal((total, joint)) @ chol.T
    for t in range(total):
        zt = innov[t].copy()
        for j, A in enumerate(lag_mats):
            if t - j - 1 >= 0:
                zt += A @ z[t - j - 1]
        z[t] = zt
    z = z[cfg.burn_in :]
    innov = innov[cfg.burn_in :]
    factors = z[:, :K]
    policy = z[:, K:]

    noise = rng.standard_normal((cfg.n_periods, N)) * np.sqrt(idio_var)
    observations = factors @ loadings_f.T + policy @ loadings_y.T + noise

    return SimulatedFavar(
        observations=observations,
        policy=policy,
        factors=factors,
        innovations=innov,
        noise=noise,
        params=params,
        config=cfg,
    )


def trace_r2(true_factors, estimated_factors):
    """Share of variation in the true factors captured by the estimated span.

    Projects the true factor matrix onto the column space of the estimated
    one and reports tr(F' P F) / tr(F' F). Invariant to any invertible
    rotation of the estimated factors; equals 1 when spans coincide.
    """
    F = np.asarray(true_factors, dtype=float)
    G = np.asarray(estimated_factors, dtype=float)
    if F.ndim != 2 or G.ndim != 2 or F.shape[0] != G.shape[0]:
        raise ValueError("factor matrices must be 2-d with equal row counts")
    denom = float(np.sum(F * F))
    if denom == 0.0:
        raise ValueError("true factors are identically zero")
    coef, *_ = np.linalg.lstsq(G, F, rcond=None)
    proj = G @ coef
    return float(np.sum(F * proj) / denom)
