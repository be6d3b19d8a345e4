"""Principal-component factor extraction and sampler initialization.

Extracts factors from a standardized panel by eigendecomposition, removes
the policy component from them using the slow-moving block, and rotates the
result onto the identification scheme (unit loadings on the first K series)
to seed the sampler.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError
from .params import FavarParams


@dataclass(frozen=True)
class PcaResult:
    """Principal-component factors with their loadings.

    ``factors`` is T x K normalized so factors' factors / T = I; ``loadings``
    is N x K with ``loadings = X' factors / T``; ``eigenvalues`` holds the
    top K covariance eigenvalues in descending order.
    """

    factors: np.ndarray
    loadings: np.ndarray
    eigenvalues: np.ndarray


def pca_factors(data, n_factors, method="auto"):
    """Extract principal-component factors from a T x N panel.

    Parameters
    ----------
    data : (T, N) array
        Panel, demeaned internally before the decomposition.
    n_factors : int
        Number of components K, at most min(T, N).
    method : str
        'cov' decomposes the N x N covariance, 'gram' the T x T Gram
        matrix; 'auto' picks 'cov' when N <= T. Both give identical
        results up to numerical precision.

    Signs are fixed so each factor's largest-magnitude loading is positive.
    """
    X = np.asarray(data, dtype=float)
    if X.ndim != 2:
        raise ValueError("data must be 2-d")
    T, N = X.shape
    K = int(n_factors)
    if not (1 <= K <= min(T, N)):
        raise ValueError(f"n_factors must be in [1, min(T, N)] = [1, {min(T, N)}], got {K}")
    if method not in ("auto", "cov", "gram"):
        raise ValueError(f"method must be 'auto', 'cov' or 'gram', got {method!r}")
    if method == "auto":
        method = "cov" if N <= T else "gram"
    X = X - X.mean(axis=0)

    if method == "cov":
        cov = X.T @ X / T
        eigvals, eigvecs = np.linalg.eigh(cov)
        order = np.argsort(eigvals)[::-1][:K]
        lam = eigvals[order]
        if lam.min() <= 1e-12:
            raise NumericalError(
                f"panel has rank below {K}: eigenvalue {lam.min():.3e}"
            )
        V = eigvecs[:, order]
        factors = X @ V / np.sqrt(lam)
    else:
        gram = X @ X.T / T
        eigvals, eigvecs = np.linalg.eigh(gram)
        order = np.argsort(eigvals)[::-1][:K]
        lam = eigvals[order]
        if lam.min() <= 1e-12:
            raise NumericalError(
                f"panel has rank below {K}: eigenvalue {lam.min():.3e}"
            )
        factors = np.sqrt(T) * eigvecs[:, order]

    loadings = X.T @ factors / T
    for k in range(K):
        i = int(np.argmax(np.abs(loadings[:, k])))
        if loadings[i, k] < 0:
            loadings[:, k] = -loadings[:, k]
            factors[:, k] = -factors[:, k]
    return PcaResult(factors=factors, loadings=loadings, eigenvalues=lam)


def purge_policy_from_factors(all_factors, slow_factors, policy):
    """Remove the policy component from factors extracted over all series.

    Regresses each factor on the slow-block factors, the policy variables
    and an intercept, then subtracts only the fitted policy part. With the
    policy identically zero the input is returned unchanged. Least squares
    uses the minimum-norm solution, so redundant regressors do not fail.
    """
    C = np.asarray(all_factors, dtype=float)
    S = np.asarray(slow_factors, dtype=float)
    Y = np.asarray(policy, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    T = C.shape[0]
    if S.shape[0] != T or Y.shape[0] != T:
        raise ValueError("factor and policy row counts differ")
    Z = np.column_stack([S, Y, np.ones(T)])
    coef, *_ = np.linalg.lstsq(Z, C, rcond=None)
    b_y = coef[S.shape[1] : S.shape[1] + Y.shape[1]]
    return C - Y @ b_y


def initial_factors(data, policy, n_factors, n_slow):
    """Build sampler starting factors satisfying the identification scheme.

    Extracts principal components from the full informational panel and from
    its slow-moving block, purges the policy component from the former, then
    rotates onto the first ``n_factors`` series: the rotation solves the
    least-squares fit of those columns on the purged factors, so the rotated
    factors load (approximately) one-to-one on them.

    Returns the T x K rotated factors.
    """
    X = np.asarray(data, dtype=float)
    Y = np.asarray(policy, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    K = int(n_factors)
    ns = int(n_slow)
    if not (K <= ns <= X.shape[1]):
        raise ValueError("need n_factors <= n_slow <= n_series")
    everything = pca_factors(X, K)
    slow = pca_factors(X[:, :ns], K)
    purged = purge_policy_from_factors(everything.factors, slow.factors, Y)
    Z = np.column_stack([purged, np.ones(X.shape[0])])
    coef, _, rank, _ = np.linalg.lstsq(Z, X[:, :K], rcond=None)
    if rank < K + 1:
        raise NumericalError("purged factors are rank deficient, cannot rotate")
    rotation = coef[:K]
    rotated = purged @ rotation
    return rotated


def two_step_estimate(data, policy, n_slow, n_factors, n_lags):
    """Principal-components alternative to the joint sampler.

    Extracts identified factors, fits every observation row and the joint
    VAR by least squares, and packages the point estimates as one parameter
    draw. No posterior uncertainty is produced; the output is a cross-check
    and initializer for the Bayesian path.

    Returns (FavarParams, T x K factors).
    """
    X = np.asarray(data, dtype=float)
    Y = np.asarray(policy, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    T, N = X.shape
    M = Y.shape[1]
    K = int(n_factors)
    d = int(n_lags)
    F = initial_factors(X, Y, K, n_slow)

    lam_f = np.zeros((N, K))
    lam_y = np.zeros((N, M))
    idio = np.empty(N)
    lam_f[:K, :K] = np.eye(K)
    design_slow = F
    design_fast = np.concatenate([F, Y], axis=1)
    for i in range(N):
        if i < K:
            resid = X[:, i] - F[:, i]
        elif i < n_slow:
            coef, _, _, _ = np.linalg.lstsq(design_slow, X[:, i], rcond=None)
            lam_f[i] = coef
            resid = X[:, i] - design_slow @ coef
        else:
            coef, _, _, _ = np.linalg.lstsq(design_fast, X[:, i], rcond=None)
            lam_f[i] = coef[:K]
            lam_y[i] = coef[K:]
            resid = X[:, i] - design_fast @ coef
        idio[i] = max(float(resid @ resid) / T, 1e-12)

    Z = np.concatenate([F, Y], axis=1)
    joint = K + M
    if T - d <= joint * d:
        raise NumericalError("too few observations for the joint dynamics fit")
    W = np.concatenate([Z[d - 1 - j: T - 1 - j] for j in range(d)], axis=1)
    targets = Z[d:]
    B, _, rank, _ = np.linalg.lstsq(W, targets, rcond=None)
    if rank < joint * d:
        raise NumericalError("lagged regressors are rank deficient")
    resid = targets - W @ B
    sigma = resid.T @ resid / resid.shape[0]
    params = FavarParams(
        loadings_f=lam_f,
        loadings_y=lam_y,
        var_coefs=B.T,
        innovation_cov=sigma,
        idio_var=idio,
    )
    params.validate(n_slow=n_slow)
    return params, F
