"""Linear-Gaussian state-space machinery: filter, smoother, posterior state
sampler, and the observation-collapsing fast path.

Conventions: ``s_t = transition @ s_{t-1} + w_t`` with ``w_t ~ N(0,
trans_cov)``, observations ``y_t = obs_matrix @ s_t + v_t`` with ``v_t ~
N(0, obs_cov)``; the prior on the first state is ``N(init_mean, init_cov)``
and the first observation already updates it. Observation and transition
covariances may be singular (exact observations, companion-form lag rows),
so every inversion routes through a guarded Cholesky/eigendecomposition
that tolerates zero eigenvalues.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import NumericalError
from .params import FavarParams

# Relative eigenvalue cutoff: condition numbers beyond 1/_RCOND fall back to
# a pseudo-inverse that zeroes the degenerate directions.
_RCOND = 1e-12

LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class StateSpaceForm:
    """One linear-Gaussian state-space model."""

    transition: np.ndarray
    trans_cov: np.ndarray
    obs_matrix: np.ndarray
    obs_cov: np.ndarray
    init_mean: np.ndarray
    init_cov: np.ndarray

    @property
    def n_state(self):
        return self.transition.shape[0]

    @property
    def n_obs(self):
        return self.obs_matrix.shape[0]

    def validate(self):
        S = self.transition.shape
        if len(S) != 2 or S[0] != S[1]:
            raise ValueError("transition must be square")
        n = S[0]
        if self.trans_cov.shape != (n, n):
            raise ValueError("trans_cov shape mismatch")
        if self.obs_matrix.ndim != 2 or self.obs_matrix.shape[1] != n:
            raise ValueError("obs_matrix must be (n_obs, n_state)")
        m = self.obs_matrix.shape[0]
        if self.obs_cov.shape != (m, m):
            raise ValueError("obs_cov shape mismatch")
        if self.init_mean.shape != (n,) or self.init_cov.shape != (n, n):
            raise ValueError("initial moments shape mismatch")
        for name, M in (
            ("trans_cov", self.trans_cov),
            ("obs_cov", self.obs_cov),
            ("init_cov", self.init_cov),
        ):
            if not np.allclose(M, M.T, atol=1e-10):
                raise ValueError(f"{name} must be symmetric")
            w = np.linalg.eigvalsh(0.5 * (M + M.T))
            if w.min() < -1e-10 * max(1.0, w.max()):
                raise ValueError(f"{name} must be positive semidefinite")
        arrays = (
            self.transition,
            self.trans_cov,
            self.obs_matrix,
            self.obs_cov,
            self.init_mean,
            self.init_cov,
        )
        if not all(np.all(np.isfinite(a)) for a in arrays):
            raise ValueError("state-space matrices must be finite")


@dataclass(frozen=True)
class FilterResult:
    """Forward-pass output; ``predicted_*[t]`` condition on observations
    before t, ``filtered_*[t]`` include observation t."""

    filtered_means: np.ndarray
    filtered_covs: np.ndarray
    predicted_means: np.ndarray
    predicted_covs: np.ndarray
    loglik: float


def _sym(M):
    return 0.5 * (M + M.T)


def _psd_inverse(M):
    """(pseudo)inverse, log-pseudo-determinant and rank of a PSD matrix.

    Cholesky fast path for well-conditioned matrices; eigendecomposition
    with a relative cutoff otherwise.
    """
    n = M.shape[0]
    if n == 0:
        return M.copy(), 0.0, 0
    try:
        c, low = cho_factor(M, lower=True, check_finite=False)
        diag = np.diag(c)
        if np.min(diag) > np.max(diag) * np.sqrt(_RCOND):
            inv = cho_solve((c, low), np.eye(n), check_finite=False)
            return _sym(inv), 2.0 * float(np.sum(np.log(diag))), n
    except np.linalg.LinAlgError:
        pass
    w, V = np.linalg.eigh(_sym(M))
    cutoff = np.max(w) * _RCOND if np.max(w) > 0 else np.inf
    keep = w > cutoff
    if not np.any(keep):
        return np.zeros_like(M), 0.0, 0
    inv = (V[:, keep] / w[keep]) @ V[:, keep].T
    return _sym(inv), float(np.sum(np.log(w[keep]))), int(np.sum(keep))


def _psd_sqrt(M):
    """Square root of a PSD matrix; degenerate directions contribute zero."""
    w, V = np.linalg.eigh(_sym(M))
    cutoff = max(np.max(w), 0.0) * _RCOND
    w = np.where(w > cutoff, w, 0.0)
    return V * np.sqrt(w)


def build_state_space(params, init_cov_scale=10.0):
    """Companion-form state space for the factor-augmented VAR.

    The state stacks d lags of z_t = [F_t; Y_t]; the observation vector
    stacks the informational panel over z_t (diagonal idiosyncratic noise)
    and the policy block observed exactly (zero observation variance).
    """
    p = params
    K, M, d, N = p.n_factors, p.n_policy, p.n_lags, p.n_series
    joint = K + M
    S = joint * d
    A = p.companion()
    Q = np.zeros((S, S))
    Q[:joint, :joint] = p.innovation_cov
    H = np.zeros((N + M, S))
    H[:N, :K] = p.loadings_f
    H[:N, K:joint] = p.loadings_y
    H[N:, K:joint] = np.eye(M)
    R = np.zeros((N + M, N + M))
    R[:N, :N] = np.diag(p.idio_var)
    ss = StateSpaceForm(
        transition=A,
        trans_cov=Q,
        obs_matrix=H,
        obs_cov=R,
        init_mean=np.zeros(S),
        init_cov=init_cov_scale * np.eye(S),
    )
    ss.validate()
    return ss


def collapse_panel(observations, loadings, idio_var):
    """Project an N-dimensional noisy panel onto the space its loadings span.

    With observations ``x_t = loadings z_t + e_t`` and diagonal noise,
    ``y1_t = W x_t`` with ``W = (L'R^-1 L)^-1 L'R^-1`` satisfies
    ``y1_t = z_t + u_t`` where ``Cov(u) = (L'R^-1 L)^-1``, so the filter can
    run on dim(z) observations instead of N. Exact for state inference; the
    returned additive constant restates the full-panel log-likelihood:
    full = collapsed + correction.

    Returns
    -------
    (collapsed, reduced_cov, correction)
        ``collapsed`` is T x dim(z), ``reduced_cov`` the full (non-diagonal)
        noise covariance of the collapsed observations.
    """
    X = np.asarray(observations, dtype=float)
    L = np.asarray(loadings, dtype=float)
    r = np.asarray(idio_var, dtype=float)
    T, N = X.shape
    J = L.shape[1]
    if L.shape[0] != N or r.shape != (N,):
        raise ValueError("loadings/idio_var do not match the panel")
    if np.any(r <= 0):
        raise ValueError("idiosyncratic variances must be strictly positive")
    if N < J:
        raise ValueError("collapse needs at least dim(z) series")
    Lw = L / r[:, None]
    G = L.T @ Lw
    G_inv, logdet_G, rank = _psd_inverse(G)
    if rank < J:
        raise NumericalError("loadings are rank deficient, cannot collapse")
    collapsed = X @ Lw @ G_inv.T
    reduced_cov = G_inv
    resid = X - collapsed @ L.T
    quad = float(np.sum(resid * resid / r))
    correction = -0.5 * (
        T * (N - J) * LOG_2PI + T * float(np.sum(np.log(r))) + T * logdet_G + quad
    )
    return collapsed, reduced_cov, correction


def build_collapsed_state_space(params, observations, policy, init_cov_scale=10.0):
    """Collapsed-observation state space for the factor-augmented VAR.

    Returns ``(model, obs, correction)`` where ``obs`` stacks the collapsed
    panel and the exactly-observed policy block, and ``correction`` restores
    the full-panel log-likelihood.
    """
    p = params
    K, M, d = p.n_factors, p.n_policy, p.n_lags
    joint = K + M
    S = joint * d
    L = np.concatenate([p.loadings_f, p.loadings_y], axis=1)
    collapsed, reduced_cov, correction = collapse_panel(observations, L, p.idio_var)
    Y = np.asarray(policy, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    obs = np.concatenate([collapsed, Y], axis=1)
    H = np.zeros((joint + M, S))
    H[:joint, :joint] = np.eye(joint)
    H[joint:, K:joint] = np.eye(M)
    R = np.zeros((joint + M, joint + M))
    R[:joint, :joint] = reduced_cov
    Q = np.zeros((S, S))
    Q[:joint, :joint] = p.innovation_cov
    ss = StateSpaceForm(
        transition=p.companion(),
        trans_cov=Q,
        obs_matrix=H,
        obs_cov=R,
        init_mean=np.zeros(S),
        init_cov=init_cov_scale * np.eye(S),
    )
    return ss, obs, correction


def kalman_filter(model, observations):
    """Forward pass with Joseph-form updates and robust innovation solves.

    Returns a FilterResult; the log-likelihood uses the prediction-error
    decomposition (degenerate innovation covariances contribute through
    their positive eigenvalues only).
    """
    y = np.asarray(observations, dtype=float)
    if y.ndim != 2 or y.shape[1] != model.n_obs:
        raise ValueError(f"observations must be (T, {model.n_obs})")
    if not np.all(np.isfinite(y)):
        raise ValueError("observations must be finite")
    T = y.shape[0]
    n, S = model.n_obs, model.n_state
    A, Q = model.transition, model.trans_cov
    H, R = model.obs_matrix, model.obs_cov
    I = np.eye(S)

    fm = np.empty((T, S))
    fc = np.empty((T, S, S))
    pm = np.empty((T, S))
    pc = np.empty((T, S, S))
    loglik = 0.0
    m, P = model.init_mean.copy(), model.init_cov.copy()
    for t in range(T):
        if t > 0:
            m = A @ m
            P = _sym(A @ P @ A.T + Q)
        pm[t] = m
        pc[t] = P
        v = y[t] - H @ m
        PHt = P @ H.T
        S_t = _sym(H @ PHt + R)
        S_inv, logdet, rank = _psd_inverse(S_t)
        if rank == 0:
            raise NumericalError(f"innovation covariance vanished at step {t}")
        K_t = PHt @ S_inv
        m = m + K_t @ v
        IKH = I - K_t @ H
        P = _sym(IKH @ P @ IKH.T + K_t @ R @ K_t.T)
        loglik += -0.5 * (rank * LOG_2PI + logdet + float(v @ S_inv @ v))
        fm[t] = m
        fc[t] = P
    return FilterResult(
        filtered_means=fm,
        filtered_covs=fc,
        predicted_means=pm,
        predicted_covs=pc,
        loglik=float(loglik),
    )


def kalman_smoother(model, observations, filter_result=None):
    """Backward recursion producing the full-sample state posterior.

    Returns (smoothed_means, smoothed_covs).
    """
    fr = filter_result or kalman_filter(model, observations)
    A = model.transition
    T, S = fr.filtered_means.shape
    sm = np.empty((T, S))
    sc = np.empty((T, S, S))
    sm[-1] = fr.filtered_means[-1]
    sc[-1] = fr.filtered_covs[-1]
    for t in range(T - 2, -1, -1):
        P = fr.filtered_covs[t]
        P_pred = fr.predicted_covs[t + 1]
        P_pred_inv, _, _ = _psd_inverse(P_pred)
        J = P @ A.T @ P_pred_inv
        sm[t] = fr.filtered_means[t] + J @ (sm[t + 1] - fr.predicted_means[t + 1])
        sc[t] = _sym(P + J @ (sc[t + 1] - P_pred) @ J.T)
    return sm, sc


def carter_kohn(model, observations, rng, n_draws=None, filter_result=None):
    """Sample state paths from their exact joint posterior.

    One forward filter pass, then a backward pass conditioning each state on
    the full drawn successor state. Conditioning on the whole successor
    (through a pseudo-inverse of the one-step-ahead covariance) keeps the
    draw exact when the transition covariance is singular, as in companion
    form with more than one lag: lagged blocks shared between s_t and
    s_{t+1} are pinned to the values already drawn rather than re-drawn.

    Returns (T, S) for scalar use, (n_draws, T, S) when ``n_draws`` is set;
    all draws in a batch share the forward pass.
    """
    fr = filter_result or kalman_filter(model, observations)
    A, Q = model.transition, model.trans_cov
    T, S = fr.filtered_means.shape
    squeeze = n_draws is None
    D = 1 if squeeze else int(n_draws)
    if D < 1:
        raise ValueError("n_draws must be positive")

    draws = np.empty((D, T, S))
    root_T = _psd_sqrt(fr.filtered_covs[-1])
    draws[:, -1, :] = fr.filtered_means[-1] + rng.standard_normal((D, S)) @ root_T.T
    for t in range(T - 2, -1, -1):
        m, P = fr.filtered_means[t], fr.filtered_covs[t]
        S_pred = _sym(A @ P @ A.T + Q)
        S_inv, _, _ = _psd_inverse(S_pred)
        G = P @ A.T @ S_inv
        cond_cov = _sym(P - G @ A @ P)
        root = _psd_sqrt(cond_cov)
        centered = draws[:, t + 1, :] - fr.filtered_means[t] @ A.T
        mean = m + centered @ G.T
        draws[:, t, :] = mean + rng.standard_normal((D, S)) @ root.T
    return draws[0] if squeeze else draws


def sample_favar_states(model, observations, rng, n_lag_blocks, block_dim,
                        filter_result=None):
    """Carter-Kohn draw specialised to companion-form states.

    After the joint draw, lag blocks shared across adjacent states are made
    exactly consistent (they are deterministic copies in the companion
    dynamics, equal up to floating-point noise in the raw draw). Returns the
    (T, S) state path.
    """
    draw = carter_kohn(model, observations, rng, filter_result=filter_result)
    J, d = block_dim, n_lag_blocks
    if d > 1:
        for t in range(draw.shape[0] - 2, -1, -1):
            draw[t, : J * (d - 1)] = draw[t + 1, J:]
    return draw
