import numpy as np
import pytest
from numpy.testing import assert_allclose

from favar.panel import load_panel, prepare_panel
from favar.params import FavarParams
from favar.simulate import (
    SimulationConfig,
    make_stable_var,
    random_spd,
    simulate_favar,
    trace_r2,
)


def small_config(**kw):
    base = dict(n_series=12, n_periods=120, n_factors=2, n_lags=2, n_slow=6, seed=3)
    base.update(kw)
    return SimulationConfig(**base)


class TestMakeStableVar:
    def test_hits_target_radius_exactly(self):
        rng = np.random.default_rng(1)
        for d in (1, 2, 4):
            coefs = make_stable_var(4, d, rng, spectral_radius=0.7)
            S = 4 * d
            comp = np.zeros((S, S))
            comp[:4, :] = coefs
            if d > 1:
                comp[4:, : 4 * (d - 1)] = np.eye(4 * (d - 1))
            radius = np.max(np.abs(np.linalg.eigvals(comp)))
            assert_allclose(radius, 0.7, rtol=1e-10)

    def test_shape(self):
        rng = np.random.default_rng(2)
        assert make_stable_var(3, 4, rng).shape == (3, 12)


class TestRandomSpd:
    def test_spd(self):
        rng = np.random.default_rng(3)
        S = random_spd(5, rng)
        assert_allclose(S, S.T)
        assert np.linalg.eigvalsh(S).min() > 0


class TestFavarParams:
    def test_validate_catches_violations(self):
        sim = simulate_favar(small_config())
        p = sim.params
        p.validate(n_slow=6)

        bad = FavarParams(
            loadings_f=p.loadings_f + 0.01,
            loadings_y=p.loadings_y,
            var_coefs=p.var_coefs,
            innovation_cov=p.innovation_cov,
            idio_var=p.idio_var,
        )
        with pytest.raises(ValueError, match="identity"):
            bad.validate()

        ly = p.loadings_y.copy()
        ly[2] = 0.3
        bad = FavarParams(p.loadings_f, ly, p.var_coefs, p.innovation_cov, p.idio_var)
        with pytest.raises(ValueError, match="zero"):
            bad.validate(n_slow=6)

        with pytest.raises(ValueError, match="positive"):
            FavarParams(
                p.loadings_f, p.loadings_y, p.var_coefs, p.innovation_cov, 0.0 * p.idio_var
            ).validate()

    def test_companion_and_lags(self):
        sim = simulate_favar(small_config())
        p = sim.params
        joint = p.n_factors + p.n_policy
        comp = p.companion()
        assert comp.shape == (joint * p.n_lags, joint * p.n_lags)
        assert_allclose(comp[:joint, :], p.var_coefs)
        assert_allclose(np.concatenate(p.lag_matrices(), axis=1), p.var_coefs)
        assert p.is_stable()
        assert_allclose(p.spectral_radius(), 0.7, rtol=1e-9)


class TestSimulateFavar:
    def test_reproducible(self):
        a = simulate_favar(small_config())
        b = simulate_favar(small_config())
        assert_allclose(a.observations, b.observations, rtol=0, atol=0)
        c = simulate_favar(small_config(seed=4))
        assert not np.allclose(a.observations, c.observations)

    def test_identification_exact(self):
        sim = simulate_favar(small_config())
        K = sim.config.n_factors
        assert_allclose(sim.params.loadings_f[:K, :K], np.eye(K), rtol=0, atol=0)
        assert_allclose(sim.params.loadings_y[:6], 0.0, rtol=0, atol=0)

    def test_observation_equation_holds_exactly(self):
        sim = simulate_favar(small_config())
        recon = (
            sim.factors @ sim.params.loadings_f.T
            + sim.policy @ sim.params.loadings_y.T
            + sim.noise
        )
        assert_allclose(recon, sim.observations, rtol=0, atol=1e-12)

    def test_var_equation_holds_exactly(self):
        sim = simulate_favar(small_config(n_lags=3))
        z = np.column_stack([sim.factors, sim.policy])
        lag_mats = sim.params.lag_matrices()
        d = len(lag_mats)
        resid = z[d:].copy()
        for j, A in enumerate(lag_mats):
            resid -= z[d - 1 - j : -1 - j] @ A.T
        assert_allclose(resid, sim.innovations[d:], rtol=0, atol=1e-10)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            small_config(n_series=2, n_factors=2)
        with pytest.raises(ValueError):
            small_config(n_slow=1)
        with pytest.raises(ValueError):
            small_config(spectral_radius=1.2)
        with pytest.raises(ValueError):
            small_config(n_periods=10)


class TestStandardized:
    def test_moments_and_records(self):
        sim = simulate_favar(small_config())
        Xs, Ys, Fs, params, records = sim.standardized()
        assert_allclose(Xs.mean(axis=0), 0.0, atol=1e-12)
        assert_allclose(Xs.std(axis=0, ddof=1), 1.0, atol=1e-12)
        assert_allclose(Ys.mean(axis=0), 0.0, atol=1e-12)
        assert len(records) == sim.config.n_series + sim.config.n_policy
        assert records[-1][1] == 1.0

    def test_transformed_truth_satisfies_observation_equation(self):
        # The standardized panel must obey the observation equation with the
        # transformed parameters up to the centered original noise, exactly.
        sim = simulate_favar(small_config())
        Xs, Ys, Fs, params, _ = sim.standardized()
        resid = Xs - Fs @ params.loadings_f.T - Ys @ params.loadings_y.T
        sds = sim.observations.std(axis=0, ddof=1)
        expected = sim.noise / sds
        assert_allclose(
            resid - resid.mean(axis=0),
            expected - expected.mean(axis=0),
            rtol=0,
            atol=1e-10,
        )

    def test_transformed_truth_satisfies_var_equation(self):
        # Joint dynamics on the standardized scale reproduce the rescaled
        # innovations exactly, up to the dropped small intercept.
        sim = simulate_favar(small_config(n_lags=2, n_periods=300))
        Xs, Ys, Fs, params, _ = sim.standardized()
        z = np.column_stack([Fs, Ys])
        lag_mats = params.lag_matrices()
        d = len(lag_mats)
        resid = z[d:].copy()
        for j, A in enumerate(lag_mats):
            resid -= z[d - 1 - j : -1 - j] @ A.T
        K = sim.config.n_factors
        sds = sim.observations.std(axis=0, ddof=1)
        d_state = np.concatenate([sds[:K], np.ones(sim.config.n_policy)])
        expected = sim.innovations[d:] / d_state
        assert_allclose(
            resid - resid.mean(axis=0),
            expected - expected.mean(axis=0),
            rtol=0,
            atol=1e-10,
        )
        # Dropped intercept is small relative to innovation scale.
        offset = np.abs((resid - expected).mean(axis=0))
        assert np.max(offset / np.sqrt(np.diag(params.innovation_cov))) < 0.2

    def test_identification_preserved(self):
        sim = simulate_favar(small_config())
        _, _, _, params, _ = sim.standardized()
        K = sim.config.n_factors
        assert_allclose(params.loadings_f[:K, :K], np.eye(K), atol=1e-12)
        assert_allclose(params.loadings_y[:6], 0.0, atol=1e-15)


class TestTraceR2:
    def test_rotation_invariance(self):
        rng = np.random.default_rng(9)
        F = rng.standard_normal((150, 3))
        Q = rng.standard_normal((3, 3)) + 3 * np.eye(3)
        assert_allclose(trace_r2(F, F @ Q), 1.0, atol=1e-10)

    def test_perfect_and_noise(self):
        rng = np.random.default_rng(10)
        F = rng.standard_normal((200, 3))
        assert_allclose(trace_r2(F, F), 1.0, atol=1e-12)
        G = rng.standard_normal((200, 3))
        assert trace_r2(F, G) < 0.15

    def test_partial_span(self):
        rng = np.random.default_rng(11)
        F = rng.standard_normal((500, 2))
        G = np.column_stack([F[:, 0], rng.standard_normal(500)])
        r2 = trace_r2(F, G)
        assert 0.3 < r2 < 0.7

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            trace_r2(np.ones((10, 2)), np.ones((11, 2)))


class TestRawCsvRoundTrip:
    def test_prepare_recovers_standardized_panel(self, tmp_path):
        sim = simulate_favar(small_config(n_periods=80))
        data_path = tmp_path / "raw.csv"
        meta_path = tmp_path / "meta.csv"
        pol_name = sim.write_raw_csv(data_path, meta_path)
        assert pol_name == "policy"
        series, metas = load_panel(data_path, meta_path)
        panel, report = prepare_panel(series, metas, policy_name="policy")
        Xs, Ys, Fs, params, records = sim.standardized()
        assert panel.n_series == sim.config.n_series + 1
        assert panel.names[-1] == "policy"
        assert panel.n_slow() == 6
        assert_allclose(panel.informational_data(), Xs, rtol=0, atol=1e-12)
        assert_allclose(panel.policy_data(), Ys, rtol=0, atol=1e-12)
        stored = np.array(panel.standardization)
        assert_allclose(stored, np.array(records), rtol=1e-12)
