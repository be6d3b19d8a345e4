"""Joint Bayesian estimation of factors and parameters by Gibbs sampling.

Each sweep alternates two conditional blocks: all model parameters given
the current factor path (conjugate normal-inverse-gamma rows for the
observation equation, matrix-normal-inverse-Wishart for the joint VAR), and
the whole factor path given the parameters (one simulation-smoother draw on
the collapsed observation model). Identification is imposed exactly within
the parameter block: the first K loading rows are pinned to the identity
with zero policy exposure, and remaining slow rows exclude the policy
regressor.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular
from scipy.stats import invwishart

from .errors import ConfigError, NumericalError
from .params import FavarParams
from .pca import initial_factors
from .state_space import build_collapsed_state_space, kalman_filter, sample_favar_states


@dataclass(frozen=True)
class PriorConfig:
    """Conjugate prior settings.

    Loadings carry independent N(0, sigma_i^2 * loading_scale * I) rows with
    IG(idio_shape, idio_scale) idiosyncratic variances; VAR coefficients a
    matrix-normal prior with row covariance equal to the innovation
    covariance and column covariance var_coef_scale * I; the innovation
    covariance an inverse Wishart with ``innovation_df`` degrees of freedom
    (defaults to K+M+2) and identity scale.
    """

    loading_scale: float = 1.0
    idio_shape: float = 3.0
    idio_scale: float = 0.5
    var_coef_scale: float = 1.0
    innovation_df: int | None = None
    innovation_scale_diag: float = 1.0
    init_cov_scale: float = 10.0

    def __post_init__(self):
        for name in ("loading_scale", "idio_shape", "idio_scale", "var_coef_scale",
                     "innovation_scale_diag", "init_cov_scale"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")

    def resolved_innovation_df(self, joint_dim):
        df = joint_dim + 2 if self.innovation_df is None else int(self.innovation_df)
        if df < joint_dim:
            raise ConfigError("innovation_df must be at least K+M")
        return df


@dataclass(frozen=True)
class SamplerConfig:
    """Chain length and model-order settings for one Gibbs run."""

    n_factors: int = 3
    n_lags: int = 4
    n_draws: int = 10000
    n_burn: int = 2000
    thin: int = 5
    seed: int = 0
    enforce_stationarity: bool = True
    max_stationarity_redraws: int = 100

    def __post_init__(self):
        if self.n_factors < 1 or self.n_lags < 1:
            raise ConfigError("n_factors and n_lags must be positive")
        if self.n_draws < 1:
            raise ConfigError("n_draws must be positive")
        if not (0 <= self.n_burn < self.n_draws):
            raise ConfigError("need 0 <= n_burn < n_draws")
        if self.thin < 1:
            raise ConfigError("thin must be at least 1")
        if self.max_stationarity_redraws < 1:
            raise ConfigError("max_stationarity_redraws must be positive")

    @property
    def n_stored(self):
        return len(range(self.n_burn, self.n_draws, self.thin))


@dataclass(frozen=True)
class GibbsResult:
    """Stored posterior draws from one chain.

    Leading axis of every array indexes stored draws (post burn-in,
    thinned). ``stationarity_redraws`` counts extra coefficient draws the
    stability constraint forced across the whole run.
    """

    factors: np.ndarray  # (n_stored, T, K)
    loadings_f: np.ndarray  # (n_stored, N, K)
    loadings_y: np.ndarray  # (n_stored, N, M)
    var_coefs: np.ndarray  # (n_stored, K+M, (K+M)*d)
    innovation_cov: np.ndarray  # (n_stored, K+M, K+M)
    idio_var: np.ndarray  # (n_stored, N)
    n_slow: int
    config: SamplerConfig
    stationarity_redraws: int = 0

    @property
    def n_stored(self):
        return self.factors.shape[0]

    def params_at(self, i):
        return FavarParams(
            loadings_f=self.loadings_f[i],
            loadings_y=self.loadings_y[i],
            var_coefs=self.var_coefs[i],
            innovation_cov=self.innovation_cov[i],
            idio_var=self.idio_var[i],
        )

    def mean_factors(self):
        return self.factors.mean(axis=0)

    def median_factors(self):
        return np.median(self.factors, axis=0)


def loading_posterior(x, design, prior):
    """Normal-inverse-gamma posterior for one observation row.

    Prior: coefficients N(0, sigma^2 * loading_scale * I), variance
    IG(idio_shape, idio_scale). Returns (mean, cov_factor, shape, scale)
    where cov_factor is the posterior coefficient covariance without the
    sigma^2 factor.
    """
    Z = np.asarray(design, dtype=float)
    x = np.asarray(x, dtype=float)
    T, p = Z.shape
    prec = Z.T @ Z + np.eye(p) / prior.loading_scale
    V = np.linalg.inv(prec)
    m = V @ (Z.T @ x)
    shape = prior.idio_shape + 0.5 * T
    scale = prior.idio_scale + 0.5 * float(x @ x - m @ prec @ m)
    return m, V, shape, scale


def var_posterior(targets, design, prior, joint_dim):
    """Matrix-normal-inverse-Wishart posterior for the joint VAR.

    Returns (coef_mean, coef_col_cov, df, scale_matrix): coefficients are
    matrix-normal around ``coef_mean`` (p x q) with column covariance
    ``coef_col_cov`` and row covariance the drawn innovation matrix; the
    innovation covariance is inverse Wishart(df, scale_matrix).
    """
    Z = np.asarray(targets, dtype=float)
    W = np.asarray(design, dtype=float)
    n, p = W.shape
    prec = W.T @ W + np.eye(p) / prior.var_coef_scale
    V = np.linalg.inv(prec)
    WtZ = W.T @ Z
    M = V @ WtZ
    S0 = prior.innovation_scale_diag * np.eye(joint_dim)
    S = S0 + Z.T @ Z - WtZ.T @ M
    S = 0.5 * (S + S.T)
    df = prior.resolved_innovation_df(joint_dim) + n
    return M, V, df, S


def _draw_loadings(data, policy, factors, n_slow, prior, rng):
    """Draw loadings and idiosyncratic variances row group by row group."""
    X = data
    F = factors
    Y = policy
    T, N = X.shape
    K = F.shape[1]
    M_pol = Y.shape[1]
    a_n = prior.idio_shape + 0.5 * T

    loadings_f = np.zeros((N, K))
    loadings_f[:K, :K] = np.eye(K)
    loadings_y = np.zeros((N, M_pol))
    idio_var = np.empty(N)

    # Pinned rows: coefficient fixed at the identity, variance conjugate.
    resid = X[:, :K] - F
    b_pin = prior.idio_scale + 0.5 * np.sum(resid * resid, axis=0)
    idio_var[:K] = b_pin / rng.standard_gamma(a_n, size=K)

    def draw_group(cols, Z):
        p = Z.shape[1]
        prec = Z.T @ Z + np.eye(p) / prior.loading_scale
        c, low = cho_factor(prec, lower=True)
        ZtX = Z.T @ cols
        m = cho_solve((c, low), ZtX)
        quad = np.sum(cols * cols, axis=0) - np.sum(ZtX * m, axis=0)
        b_n = prior.idio_scale + 0.5 * quad
        if np.any(b_n <= 0):
            raise NumericalError("negative inverse-gamma scale in loading draw")
        sig2 = b_n / rng.standard_gamma(a_n, size=cols.shape[1])
        eps = rng.standard_normal(m.shape)
        beta = m + solve_triangular(c.T, eps, lower=False) * np.sqrt(sig2)
        return beta, sig2

    if n_slow > K:
        beta, sig2 = draw_group(X[:, K:n_slow], F)
        loadings_f[K:n_slow] = beta.T
        idio_var[K:n_slow] = sig2
    if N > n_slow:
        Z = np.concatenate([F, Y], axis=1)
        beta, sig2 = draw_group(X[:, n_slow:], Z)
        loadings_f[n_slow:] = beta[:K].T
        loadings_y[n_slow:] = beta[K:].T
        idio_var[n_slow:] = sig2
    return loadings_f, loadings_y, idio_var


def _companion_stable(var_coefs, joint, d):
    S = joint * d
    comp = np.zeros((S, S))
    comp[:joint] = var_coefs
    if d > 1:
        comp[joint:, : joint * (d - 1)] = np.eye(joint * (d - 1))
    return bool(np.max(np.abs(np.linalg.eigvals(comp))) < 1.0)


def _draw_var(factors, policy, n_lags, prior, rng, enforce_stationarity,
              max_redraws):
    """Draw VAR coefficients and innovation covariance given the factor path.

    Under the stationarity restriction, coefficients are redrawn (holding
    the innovation draw) until the companion matrix is stable; exhausting
    the cap raises NumericalError.
    """
    z = np.concatenate([factors, policy], axis=1)
    T, joint = z.shape
    d = n_lags
    if T - d < joint * d + 1:
        raise NumericalError(f"sample too short for a VAR with {d} lags")
    W = np.concatenate([z[d - 1 - j : T - 1 - j] for j in range(d)], axis=1)
    Zt = z[d:]
    try:
        M, V, df, S = var_posterior(Zt, W, prior, joint)
        sigma = invwishart.rvs(df=df, scale=S, random_state=rng)
        sigma = np.atleast_2d(sigma)
        chol_sigma = np.linalg.cholesky(sigma)
        prec = np.linalg.inv(V)
        c, low = cho_factor(prec, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"joint dynamics draw failed: {exc}") from None
    redraws = 0
    while True:
        G = rng.standard_normal(M.shape)
        B = M + solve_triangular(c.T, G, lower=False) @ chol_sigma.T
        var_coefs = B.T
        if not enforce_stationarity or _companion_stable(var_coefs, joint, d):
            return var_coefs, sigma, redraws
        redraws += 1
        if redraws >= max_redraws:
            raise NumericalError(
                f"no stable VAR draw in {max_redraws} attempts; "
                "the posterior concentrates on explosive dynamics"
            )


def _draw_factor_path(params, data, policy, rng, init_cov_scale):
    model, obs, _ = build_collapsed_state_space(
        params, data, policy, init_cov_scale=init_cov_scale
    )
    fr = kalman_filter(model, obs)
    joint = params.n_factors + params.n_policy
    states = sample_favar_states(
        model, obs, rng, params.n_lags, joint, filter_result=fr
    )
    return states[:, : params.n_factors]


def run_gibbs(data, policy, n_slow, config, prior=None, progress=None):
    """Run one Gibbs chain on a prepared panel.

    Parameters
    ----------
    data : (T, N) array
        Standardized informational panel, slow series first.
    policy : (T, M) array
        Demeaned policy block.
    n_slow : int
        Count of leading slow series (at least n_factors).
    config : SamplerConfig
    prior : PriorConfig, optional
    progress : callable, optional
        Called with (sweep_index, n_draws) every 500 sweeps.

    Returns a GibbsResult with post burn-in, thinned draws.
    """
    prior = prior or PriorConfig()
    X = np.asarray(data, dtype=float)
    Y = np.asarray(policy, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    T, N = X.shape
    K = config.n_factors
    if Y.shape[0] != T:
        raise ConfigError("data and policy row counts differ")
    if not (K <= n_slow <= N):
        raise ConfigError("need n_factors <= n_slow <= n_series")
    if not np.all(np.isfinite(X)) or not np.all(np.isfinite(Y)):
        raise ConfigError("data must be finite")
    joint_dim = K + Y.shape[1]
    if T <= joint_dim * (config.n_lags + 1):
        raise ConfigError("panel too short for the requested lag order")

    rng = np.random.default_rng(config.seed)
    F = initial_factors(X, Y, K, n_slow)

    n_stored = config.n_stored
    M_pol = Y.shape[1]
    joint = K + M_pol
    factors = np.empty((n_stored, T, K))
    loadings_f = np.empty((n_stored, N, K))
    loadings_y = np.empty((n_stored, N, M_pol))
    var_coefs = np.empty((n_stored, joint, joint * config.n_lags))
    innovation_cov = np.empty((n_stored, joint, joint))
    idio_var = np.empty((n_stored, N))
    total_redraws = 0
    store = 0
    for sweep in range(config.n_draws):
        lf, ly, iv = _draw_loadings(X, Y, F, n_slow, prior, rng)
        vc, ic, redraws = _draw_var(
            F, Y, config.n_lags, prior, rng,
            config.enforce_stationarity, config.max_stationarity_redraws,
        )
        total_redraws += redraws
        params = FavarParams(lf, ly, vc, ic, iv)
        F = _draw_factor_path(params, X, Y, rng, prior.init_cov_scale)
        if sweep >= config.n_burn and (sweep - config.n_burn) % config.thin == 0:
            factors[store] = F
            loadings_f[store] = lf
            loadings_y[store] = ly
            var_coefs[store] = vc
            innovation_cov[store] = ic
            idio_var[store] = iv
            store += 1
        if progress is not None and (sweep + 1) % 500 == 0:
            progress(sweep + 1, config.n_draws)
    assert store == n_stored
    return GibbsResult(
        factors=factors,
        loadings_f=loadings_f,
        loadings_y=loadings_y,
        var_coefs=var_coefs,
        innovation_cov=innovation_cov,
        idio_var=idio_var,
        n_slow=n_slow,
        config=config,
        stationarity_redraws=total_redraws,
    )


def _chain_task(args):
    return run_gibbs(*args)


def run_chains(data, policy, n_slow, config, n_chains, prior=None, progress=None,
               workers=1):
    """Run independent chains; chain c reseeds at seed + 1000*c.

    With ``workers`` > 1 chains run in a process pool; results come back in
    chain order either way, so the output is identical to a sequential run.
    """
    if n_chains < 1:
        raise ConfigError("n_chains must be positive")
    configs = [replace(config, seed=config.seed + 1000 * c) for c in range(n_chains)]
    if workers <= 1 or n_chains == 1:
        return [run_gibbs(data, policy, n_slow, c, prior, progress) for c in configs]
    tasks = [(data, policy, n_slow, c, prior) for c in configs]
    with ProcessPoolExecutor(max_workers=min(int(workers), n_chains)) as pool:
        return list(pool.map(_chain_task, tasks))


def geweke_z(series, first=0.1, last=0.5):
    """Geweke convergence z-score comparing early and late chain segments.

    Constant series (identification-pinned entries) score zero.
    """
    x = np.asarray(series, dtype=float)
    n = x.size
    if n < 20:
        raise ValueError("need at least 20 draws for a Geweke score")
    a = x[: max(int(first * n), 2)]
    b = x[-max(int(last * n), 2):]
    va = a.var(ddof=1)
    vb = b.var(ddof=1)
    denom = va / a.size + vb / b.size
    if denom == 0.0:
        return 0.0
    return float((a.mean() - b.mean()) / np.sqrt(denom))


def convergence_report(result, threshold=2.0):
    """Geweke diagnostics per parameter group.

    Returns {group: {"max_abs_z", "n_flagged", "n_scalars"}} with scalars
    flagged when |z| exceeds ``threshold``.
    """
    groups = {
        "factors": result.factors,
        "loadings_f": result.loadings_f,
        "loadings_y": result.loadings_y,
        "var_coefs": result.var_coefs,
        "innovation_cov": result.innovation_cov,
        "idio_var": result.idio_var,
    }
    report = {}
    for name, arr in groups.items():
        flat = arr.reshape(arr.shape[0], -1)
        zs = np.array([geweke_z(flat[:, j]) for j in range(flat.shape[1])])
        report[name] = {
            "max_abs_z": float(np.max(np.abs(zs))) if zs.size else 0.0,
            "n_flagged": int(np.sum(np.abs(zs) > threshold)),
            "n_scalars": int(zs.size),
        }
    return report
