"""Impulse responses to an orthogonalized policy shock, with posterior bands.

The shock is identified by a Cholesky factorization of the joint innovation
covariance with the policy block ordered last: a policy shock moves the
policy rate on impact by ``shock_size`` in its own units and leaves factors
untouched contemporaneously. Responses propagate through the companion
dynamics and map onto every observed series through its loadings.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError

# Transformation codes whose level path integrates the response once or twice.
_CUMULATE_ONCE = (2, 5)
_CUMULATE_TWICE = (3, 6)

UNITS = ("standardized", "native", "level")


@dataclass(frozen=True)
class IrfSummary:
    """Pointwise posterior band summary of impulse responses.

    Arrays are (horizon+1, n_variables); ``quantiles`` records the
    (lower, upper) probability levels behind the band.
    """

    median: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    quantiles: tuple


def shock_vector(innovation_cov, shock_size, shock_index=None):
    """Impact of an orthogonalized shock to one joint-innovation component.

    Cholesky-orthogonalizes ``innovation_cov`` and scales the chosen column
    so the shocked component moves exactly ``shock_size`` on impact.
    ``shock_index`` defaults to the last component (the policy block in the
    ordering used throughout).
    """
    sigma = np.asarray(innovation_cov, dtype=float)
    q = sigma.shape[0]
    idx = q - 1 if shock_index is None else int(shock_index)
    if not (0 <= idx < q):
        raise ValueError(f"shock_index must be in [0, {q})")
    try:
        P = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        raise NumericalError("innovation covariance is not positive definite") from None
    col = P[:, idx]
    return col * (float(shock_size) / col[idx])


def state_responses(companion, innovation_cov, horizon, shock_size=1.0,
                    shock_index=None):
    """Orthogonalized responses of the current-period state block.

    ``companion`` is the S x S stacked-lag transition with the joint
    innovation entering its first J rows, J being the side of
    ``innovation_cov``. Returns (horizon+1, J); horizon 0 is the impact
    period. Works for any VAR dimension, including scalars.
    """
    H = int(horizon)
    if H < 0:
        raise ValueError("horizon must be non-negative")
    A = np.asarray(companion, dtype=float)
    joint = np.asarray(innovation_cov, dtype=float).shape[0]
    if A.shape[0] != A.shape[1] or A.shape[0] % joint:
        raise ValueError("companion side must be a multiple of the innovation side")
    delta = shock_vector(innovation_cov, shock_size, shock_index)
    state = np.zeros(A.shape[0])
    state[:joint] = delta
    out = np.empty((H + 1, joint))
    out[0] = state[:joint]
    for h in range(1, H + 1):
        state = A @ state
        out[h] = state[:joint]
    return out


def impulse_response(params, horizon, shock_size=0.25, shock_index=None):
    """Responses of every observed series to one policy shock.

    Returns (horizon+1, N+M): informational series first (loading-weighted
    combinations of the factor and policy responses), then the policy block.
    Horizon 0 is the impact period.
    """
    p = params
    K = p.n_factors
    z_resp = state_responses(p.companion(), p.innovation_cov, horizon,
                             shock_size, shock_index)
    L = np.concatenate([p.loadings_f, p.loadings_y], axis=1)
    panel_resp = z_resp @ L.T
    return np.concatenate([panel_resp, z_resp[:, K:]], axis=1)


def posterior_irfs(result, horizon, shock_size=0.25):
    """Impulse responses for every stored posterior draw.

    Returns (n_stored, horizon+1, N+M) in standardized units.
    """
    n = result.n_stored
    first = impulse_response(result.params_at(0), horizon, shock_size)
    out = np.empty((n,) + first.shape)
    out[0] = first
    for i in range(1, n):
        out[i] = impulse_response(result.params_at(i), horizon, shock_size)
    return out


def convert_irf_units(draws, records, tcodes, units):
    """Restate standardized-unit responses in native or level units.

    ``records`` holds the per-variable (mean, stddev) standardization pairs
    and ``tcodes`` the transformation codes, both in panel column order
    (policy last). Native units multiply by the stored standard deviation;
    level units additionally integrate once (first-differenced variables) or
    twice (twice-differenced) along the horizon, leaving codes 1 and 4
    untouched. Log-based codes stay in log units.
    """
    if units not in UNITS:
        raise ValueError(f"units must be one of {UNITS}, got {units!r}")
    X = np.asarray(draws, dtype=float)
    n_vars = X.shape[-1]
    if len(records) != n_vars or len(tcodes) != n_vars:
        raise ValueError("records/tcodes length must match the variable axis")
    if units == "standardized":
        return X.copy()
    stds = np.array([r[1] for r in records], dtype=float)
    out = X * stds
    if units == "native":
        return out
    axis = X.ndim - 2
    for j, tc in enumerate(tcodes):
        if tc in _CUMULATE_ONCE:
            out[..., j] = np.cumsum(out[..., j], axis=axis)
        elif tc in _CUMULATE_TWICE:
            out[..., j] = np.cumsum(np.cumsum(out[..., j], axis=axis), axis=axis)
        elif tc not in (1, 4):
            raise ValueError(f"unknown tcode {tc}")
    return out


def summarize_irfs(draws, quantiles=(0.025, 0.975)):
    """Pointwise median and quantile band over the draw axis."""
    lo, hi = quantiles
    if not (0.0 < lo < 0.5 < hi < 1.0):
        raise ValueError("quantiles must straddle the median inside (0, 1)")
    X = np.asarray(draws, dtype=float)
    if X.ndim != 3:
        raise ValueError("draws must be (n_draws, horizon+1, n_variables)")
    return IrfSummary(
        median=np.quantile(X, 0.5, axis=0),
        lower=np.quantile(X, lo, axis=0),
        upper=np.quantile(X, hi, axis=0),
        quantiles=(float(lo), float(hi)),
    )


def coverage_fraction(summary, truth):
    """Share of (horizon, variable) cells whose band contains the truth."""
    t = np.asarray(truth, dtype=float)
    if t.shape != summary.median.shape:
        raise ValueError("truth shape does not match the summary")
    inside = (summary.lower <= t) & (t <= summary.upper)
    return float(inside.mean())
