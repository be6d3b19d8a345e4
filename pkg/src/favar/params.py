"""Model parameter container shared by the sampler, simulator and IRF code.

The model couples K latent factors F_t with M observed policy variables Y_t
through a VAR(d) on the stacked vector z_t = [F_t; Y_t] and an observation
equation X_t = loadings_f F_t + loadings_y Y_t + e_t with diagonal
idiosyncratic covariance. Identification pins the top K x K block of
loadings_f to the identity and zeroes loadings_y on slow-moving rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class FavarParams:
    """One complete set of model parameters.

    Attributes
    ----------
    loadings_f : (N, K) array
        Factor loadings; rows 0..K-1 form the identity block.
    loadings_y : (N, M) array
        Policy loadings; zero on slow rows.
    var_coefs : (K+M, (K+M)*d) array
        Stacked VAR coefficient matrices ``[A_1 | A_2 | ... | A_d]``.
    innovation_cov : (K+M, K+M) array
        Covariance of the joint VAR innovation.
    idio_var : (N,) array
        Idiosyncratic observation variances, strictly positive.
    """

    loadings_f: np.ndarray
    loadings_y: np.ndarray
    var_coefs: np.ndarray
    innovation_cov: np.ndarray
    idio_var: np.ndarray

    @property
    def n_series(self):
        return self.loadings_f.shape[0]

    @property
    def n_factors(self):
        return self.loadings_f.shape[1]

    @property
    def n_policy(self):
        return self.loadings_y.shape[1]

    @property
    def n_lags(self):
        joint = self.n_factors + self.n_policy
        return self.var_coefs.shape[1] // joint

    def validate(self, n_slow=None, atol=0.0):
        """Check shapes and identification; raise ValueError on violation.

        ``n_slow`` enables the zero-restriction check on the first
        ``n_slow`` rows of ``loadings_y`` (always at least the K pinned
        rows). ``atol`` relaxes the equality checks for estimated values.
        """
        N, K = self.loadings_f.shape
        if self.loadings_y.shape[0] != N:
            raise ValueError("loadings_f and loadings_y row counts differ")
        joint = K + self.loadings_y.shape[1]
        if self.var_coefs.shape[0] != joint or self.var_coefs.shape[1] % joint:
            raise ValueError(
                f"var_coefs shape {self.var_coefs.shape} not (K+M, (K+M)*d) "
                f"with K+M={joint}"
            )
        if self.innovation_cov.shape != (joint, joint):
            raise ValueError("innovation_cov must be (K+M, K+M)")
        if self.idio_var.shape != (N,):
            raise ValueError("idio_var must have one entry per series")
        if np.any(self.idio_var <= 0):
            raise ValueError("idiosyncratic variances must be strictly positive")
        if not np.allclose(self.innovation_cov, self.innovation_cov.T, atol=1e-10):
            raise ValueError("innovation_cov must be symmetric")
        eigvals = np.linalg.eigvalsh(0.5 * (self.innovation_cov + self.innovation_cov.T))
        if eigvals.min() <= 0:
            raise ValueError("innovation_cov must be positive definite")
        if N < K:
            raise ValueError("need at least as many series as factors")
        if np.max(np.abs(self.loadings_f[:K, :K] - np.eye(K))) > atol:
            raise ValueError("top K x K block of loadings_f must be the identity")
        n_zero = K if n_slow is None else max(int(n_slow), K)
        if n_zero > N:
            raise ValueError("n_slow exceeds the number of series")
        if np.max(np.abs(self.loadings_y[:n_zero])) > atol:
            raise ValueError(f"first {n_zero} rows of loadings_y must be zero")

    def companion(self):
        """Companion transition matrix of the stacked VAR, (S, S) with
        S = (K+M)*d."""
        joint = self.n_factors + self.n_policy
        d = self.n_lags
        S = joint * d
        A = np.zeros((S, S))
        A[:joint, :] = self.var_coefs
        if d > 1:
            A[joint:, : joint * (d - 1)] = np.eye(joint * (d - 1))
        return A

    def spectral_radius(self):
        return float(np.max(np.abs(np.linalg.eigvals(self.companion()))))

    def is_stable(self, threshold=1.0):
        return self.spectral_radius() < threshold

    def lag_matrices(self):
        """List of the d individual (K+M, K+M) coefficient matrices."""
        joint = self.n_factors + self.n_policy
        return [
            self.var_coefs[:, j * joint : (j + 1) * joint] for j in range(self.n_lags)
        ]
