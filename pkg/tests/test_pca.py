import numpy as np
import pytest
from numpy.testing import assert_allclose

from favar.errors import NumericalError
from favar.pca import initial_factors, pca_factors, purge_policy_from_factors
from favar.simulate import SimulationConfig, simulate_favar, trace_r2


def factor_panel(T=200, N=30, K=3, seed=5, noise=0.3):
    rng = np.random.default_rng(seed)
    F = rng.standard_normal((T, K))
    L = rng.standard_normal((N, K))
    X = F @ L.T + noise * rng.standard_normal((T, N))
    return X, F, L


class TestPcaFactors:
    def test_normalization(self):
        X, *_ = factor_panel()
        res = pca_factors(X, 3)
        T = X.shape[0]
        assert_allclose(res.factors.T @ res.factors / T, np.eye(3), atol=1e-10)

    def test_loadings_definition(self):
        X, *_ = factor_panel()
        res = pca_factors(X, 3)
        Xc = X - X.mean(axis=0)
        assert_allclose(res.loadings, Xc.T @ res.factors / X.shape[0], atol=1e-12)

    def test_residuals_orthogonal_to_factors(self):
        X, *_ = factor_panel()
        res = pca_factors(X, 3)
        Xc = X - X.mean(axis=0)
        resid = Xc - res.factors @ res.loadings.T
        assert np.max(np.abs(res.factors.T @ resid)) < 1e-8

    def test_eigenvalues_descending_match_loading_norms(self):
        X, *_ = factor_panel()
        res = pca_factors(X, 4)
        assert np.all(np.diff(res.eigenvalues) <= 0)
        assert_allclose((res.loadings**2).sum(axis=0), res.eigenvalues, rtol=1e-10)

    def test_cov_and_gram_paths_agree(self):
        X, *_ = factor_panel(T=40, N=25)
        a = pca_factors(X, 3, method="cov")
        b = pca_factors(X, 3, method="gram")
        assert_allclose(a.factors, b.factors, atol=1e-8)
        assert_allclose(a.loadings, b.loadings, atol=1e-8)
        assert_allclose(a.eigenvalues, b.eigenvalues, rtol=1e-10)

    def test_auto_picks_by_shape(self):
        wide, *_ = factor_panel(T=20, N=50)
        tall, *_ = factor_panel(T=50, N=20)
        for X in (wide, tall):
            auto = pca_factors(X, 2)
            cov = pca_factors(X, 2, method="cov")
            assert_allclose(auto.factors, cov.factors, atol=1e-8)

    def test_sign_convention(self):
        X, *_ = factor_panel(seed=6)
        res = pca_factors(X, 3)
        for k in range(3):
            i = np.argmax(np.abs(res.loadings[:, k]))
            assert res.loadings[i, k] > 0

    def test_recovers_factor_span(self):
        X, F, _ = factor_panel(T=300, N=60, K=3, noise=0.3)
        res = pca_factors(X, 3)
        assert trace_r2(F, res.factors) > 0.95

    def test_rank_deficient_raises(self):
        rng = np.random.default_rng(7)
        col = rng.standard_normal(50)
        X = np.column_stack([col, 2 * col, 3 * col])
        with pytest.raises(NumericalError, match="rank"):
            pca_factors(X, 2)

    def test_k_out_of_range(self):
        X, *_ = factor_panel(T=30, N=10)
        with pytest.raises(ValueError):
            pca_factors(X, 0)
        with pytest.raises(ValueError):
            pca_factors(X, 11)


class TestPurge:
    def test_zero_policy_is_identity(self):
        rng = np.random.default_rng(8)
        C = rng.standard_normal((100, 3))
        S = rng.standard_normal((100, 3))
        Y = np.zeros((100, 1))
        out = purge_policy_from_factors(C, S, Y)
        assert_allclose(out, C, rtol=0, atol=0)

    def test_exact_removal_in_noiseless_design(self):
        # Factors built exactly as slow part + policy part: the regression
        # recovers the split and subtracting the policy part is exact.
        rng = np.random.default_rng(9)
        T = 150
        S = rng.standard_normal((T, 2))
        Y = rng.standard_normal((T, 1))
        delta = rng.standard_normal((2, 3))
        gamma = rng.standard_normal((1, 3))
        C = S @ delta + Y @ gamma
        out = purge_policy_from_factors(C, S, Y)
        assert_allclose(out, S @ delta, atol=1e-10)

    def test_purged_orthogonal_to_policy_given_slow(self):
        rng = np.random.default_rng(10)
        T = 200
        S = rng.standard_normal((T, 2))
        Y = rng.standard_normal((T, 1)) + 0.5 * S[:, [0]]
        C = rng.standard_normal((T, 3)) + Y @ rng.standard_normal((1, 3))
        out = purge_policy_from_factors(C, S, Y)
        # Re-running the regression on the output gives zero policy slope.
        Z = np.column_stack([S, Y, np.ones(T)])
        coef, *_ = np.linalg.lstsq(Z, out, rcond=None)
        assert np.max(np.abs(coef[2])) < 1e-10

    def test_1d_policy_accepted(self):
        rng = np.random.default_rng(11)
        C = rng.standard_normal((50, 2))
        S = rng.standard_normal((50, 2))
        y = rng.standard_normal(50)
        out = purge_policy_from_factors(C, S, y)
        assert out.shape == (50, 2)

    def test_row_mismatch(self):
        with pytest.raises(ValueError):
            purge_policy_from_factors(np.ones((10, 2)), np.ones((9, 2)), np.ones(10))


class TestInitialFactors:
    def test_recovers_truth_on_simulated_panel(self):
        cfg = SimulationConfig(
            n_series=60, n_periods=300, n_factors=3, n_lags=2, n_slow=30, seed=12,
            idio_scale=0.3,
        )
        sim = simulate_favar(cfg)
        Xs, Ys, Fs, params, _ = sim.standardized()
        F0 = initial_factors(Xs, Ys, 3, 30)
        assert F0.shape == (300, 3)
        assert trace_r2(Fs, F0) > 0.85

    def test_rotation_targets_anchor_series(self):
        # After rotation the first K series should load near one-to-one on
        # the initial factors.
        cfg = SimulationConfig(
            n_series=60, n_periods=400, n_factors=3, n_lags=1, n_slow=30, seed=13,
            idio_scale=0.1,
        )
        sim = simulate_favar(cfg)
        Xs, Ys, Fs, params, _ = sim.standardized()
        F0 = initial_factors(Xs, Ys, 3, 30)
        Z = np.column_stack([F0, np.ones(400)])
        coef, *_ = np.linalg.lstsq(Z, Xs[:, :3], rcond=None)
        assert_allclose(coef[:3], np.eye(3), atol=0.2)

    def test_bad_slow_count(self):
        rng = np.random.default_rng(14)
        X = rng.standard_normal((50, 10))
        Y = rng.standard_normal((50, 1))
        with pytest.raises(ValueError):
            initial_factors(X, Y, 3, 2)
