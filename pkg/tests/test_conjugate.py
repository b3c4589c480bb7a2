import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from bayesmono.conjugate import (
    HyperParams,
    KPosterior,
    b_tilde,
    log_posterior_k_unnorm,
    posterior_k_table,
    sample_omega_given_k_sigma,
    sample_sigma2_given_k,
    sigma_posterior_mean_given_k,
)
from bayesmono.step_model import Dataset, bin_stats
from oracles import brute_bins, posterior_k_quadrature


def direct_log_post(y, k, hp, k_max):
    """Unnormalised log pi(k | y) written out term by term with plain loops."""
    n = len(y)
    bins = brute_bins(n, k)
    total = hp.b
    log_counts = 0.0
    for j in range(k):
        pts = [y[i] for i in range(n) if bins[i] == j]
        nj = len(pts)
        ybar = sum(pts) / nj if nj else hp.m
        total += 0.5 * (sum((v - ybar) ** 2 for v in pts) + nj * hp.mu / (nj + hp.mu) * (ybar - hp.m) ** 2)
        log_counts += math.log(nj + hp.mu)
    norm = sum(hp.lam * (1 - hp.lam) ** (j - hp.k_min) for j in range(hp.k_min, k_max + 1))
    log_prior = math.log(hp.lam * (1 - hp.lam) ** (k - hp.k_min) / norm)
    return log_prior - (hp.a + n / 2) * math.log(total) + k / 2 * math.log(hp.mu) - 0.5 * log_counts


class TestHyperParams:
    @pytest.mark.parametrize("bad", [dict(lam=0), dict(lam=1), dict(a=0), dict(b=-1), dict(mu=0), dict(level=1),
                                     dict(gamma0=0), dict(k_min=0), dict(k_min=3, k_max=2)])
    def test_validation(self, bad):
        with pytest.raises(ValueError):
            HyperParams(**bad)

    def test_k_max_capped_at_n(self):
        assert HyperParams(k_max=50).effective_k_max(20) == 20
        assert HyperParams().effective_k_max(20) == 20
        with pytest.raises(ValueError):
            HyperParams(k_min=3).effective_k_max(2)


class TestBTilde:
    def test_all_zero(self):
        assert b_tilde(Dataset([0.0, 0.0]), 1, HyperParams(m=0, b=1, mu=1)) == 1.0

    def test_hand_value(self):
        # 1 + 0.5 * (2 * 2 / 4) * (0 - 1)^2
        assert b_tilde(Dataset([0.0, 0.0]), 1, HyperParams(m=1, b=1, mu=2)) == pytest.approx(1.5)

    def test_domain(self):
        with pytest.raises(ValueError):
            b_tilde(Dataset([0.0, 1.0]), 3, HyperParams())

    @given(arrays(np.float64, st.integers(2, 30), elements=st.floats(-50, 50)), st.data())
    def test_at_least_b(self, y, data):
        k = data.draw(st.integers(1, y.size))
        hp = HyperParams(b=0.7, m=data.draw(st.floats(-5, 5)))
        assert b_tilde(Dataset(y), k, hp) >= hp.b

    def test_equality_only_at_m(self):
        hp = HyperParams(m=2.0, b=0.3)
        assert b_tilde(Dataset(np.full(9, 2.0)), 3, hp) == hp.b
        assert b_tilde(Dataset(np.full(9, 2.1)), 3, hp) > hp.b


class TestLogPosteriorK:
    def setup_method(self):
        rng = np.random.default_rng(12)
        self.y = rng.normal(size=17).tolist()
        self.hp = HyperParams(lam=0.3, a=2.5, b=0.8, m=0.2, mu=0.4, k_min=1)

    def test_matches_direct_formula(self):
        for k in range(1, 18):
            assert log_posterior_k_unnorm(Dataset(self.y), k, self.hp) == pytest.approx(
                direct_log_post(self.y, k, self.hp, 17), rel=1e-12)

    def test_ratio(self):
        data = Dataset(self.y)
        lp3, lp5 = (log_posterior_k_unnorm(data, k, self.hp) for k in (3, 5))
        direct = math.exp(direct_log_post(self.y, 3, self.hp, 17) - direct_log_post(self.y, 5, self.hp, 17))
        assert math.exp(lp3 - lp5) == pytest.approx(direct, rel=1e-10)

    def test_support(self):
        data = Dataset(self.y)
        with pytest.raises(ValueError):
            log_posterior_k_unnorm(data, 0, self.hp)
        with pytest.raises(ValueError):
            log_posterior_k_unnorm(data, 18, self.hp)
        with pytest.raises(ValueError):
            log_posterior_k_unnorm(data, 1, self.hp.with_(k_min=2))

    def test_cached_target_agrees(self):
        data = Dataset(self.y)
        target = KPosterior(data, self.hp)
        for k in (1, 4, 9, 17):
            assert target.logp(k) == log_posterior_k_unnorm(data, k, self.hp)
            assert target.b_tilde(k) == b_tilde(data, k, self.hp)


class TestPosteriorKTable:
    def test_normalised(self):
        rng = np.random.default_rng(1)
        data = Dataset(rng.normal(size=80))
        for hp in (HyperParams(), HyperParams(k_min=1, lam=0.5), HyperParams(k_max=10, mu=3.0)):
            table = posterior_k_table(data, hp)
            assert np.all(np.isfinite(table)) and np.all(table >= 0)
            assert abs(table.sum() - 1.0) < 1e-12
            assert np.all(table[: hp.k_min - 1] == 0)

    def test_large_n_no_overflow(self):
        rng = np.random.default_rng(2)
        data = Dataset(1e3 * rng.normal(size=2000))
        table = posterior_k_table(data, HyperParams(k_max=60))
        assert abs(table.sum() - 1.0) < 1e-12

    def test_flat_truth_concentrates_on_small_k(self):
        rng = np.random.default_rng(5)
        data = Dataset(rng.normal(size=100))
        hp = HyperParams(lam=0.05, mu=0.01, m=float(np.mean(data.y)), a=2.0, b=1.0)
        table = posterior_k_table(data, hp)
        assert np.argmax(table) + 1 == 2
        assert table[1] > 0.5

    def test_invariant_under_common_offset_in_logs(self):
        # normalisation subtracts the max, so the table cannot depend on a constant
        rng = np.random.default_rng(7)
        data = Dataset(rng.normal(size=40))
        t1 = posterior_k_table(data, HyperParams(lam=0.2))
        t2 = posterior_k_table(data, HyperParams(lam=0.2, k_max=40))
        np.testing.assert_allclose(t1, t2, rtol=1e-12)

    @pytest.mark.parametrize("y", [[0.3, -0.5, 1.2, 0.8], [1.0, 0.2, -0.4], [2.0, 2.5, 1.0, 3.0]])
    def test_quadrature_oracle(self, y):
        hp = HyperParams(lam=0.4, a=2.0, b=1.0, m=0.1, mu=0.5, k_min=1, k_max=2)
        table = posterior_k_table(Dataset(y), hp)
        oracle = posterior_k_quadrature(y, hp, [1, 2])
        assert 0.5 * np.abs(table - oracle).sum() < 1e-4


class TestSigma2Draws:
    def setup_method(self):
        rng = np.random.default_rng(3)
        self.data = Dataset(rng.normal(size=30))
        self.hp = HyperParams(a=1.5, b=0.5, m=0.0, mu=0.2)

    def test_mean(self):
        draws = sample_sigma2_given_k(self.data, 4, self.hp, np.random.default_rng(0), size=100_000)
        expected = b_tilde(self.data, 4, self.hp) / (self.hp.a + 15 - 1)
        assert np.all(draws > 0)
        assert draws.mean() == pytest.approx(expected, rel=0.02)

    def test_reproducible(self):
        a = sample_sigma2_given_k(self.data, 4, self.hp, np.random.default_rng(9))
        b = sample_sigma2_given_k(self.data, 4, self.hp, np.random.default_rng(9))
        assert a == b


class TestOmegaDraws:
    def test_empty_bin_uses_prior(self):
        # n = 2, k = 2: bin 1 is empty
        data = Dataset([5.0, 7.0])
        hp = HyperParams(m=-1.0, mu=0.5)
        assert bin_stats(data, 2).counts[0] == 0
        rng = np.random.default_rng(0)
        draws = np.array([sample_omega_given_k_sigma(data, 2, 2.0, hp, rng) for _ in range(20_000)])
        se_mean = math.sqrt(2.0 / 0.5 / 20_000)
        assert abs(draws[:, 0].mean() - (-1.0)) < 3 * se_mean
        assert draws[:, 0].var() == pytest.approx(2.0 / 0.5, rel=0.05)

    def test_tight_prior_pins_to_m(self):
        data = Dataset([5.0, 7.0, 9.0, 2.0])
        omega = sample_omega_given_k_sigma(data, 2, 1.0, HyperParams(m=3.0, mu=1e8), np.random.default_rng(1))
        np.testing.assert_allclose(omega, 3.0, atol=1e-3)

    def test_mc_moments(self):
        rng = np.random.default_rng(4)
        data = Dataset(rng.normal(2.0, 1.0, size=12))
        hp = HyperParams(m=0.5, mu=0.3)
        stats = bin_stats(data, 3, hp.m)
        mean = (hp.m * hp.mu + stats.counts * stats.means) / (stats.counts + hp.mu)
        sd = np.sqrt(0.8 / (stats.counts + hp.mu))
        draws = np.array([sample_omega_given_k_sigma(data, 3, 0.8, hp, rng) for _ in range(100_000)])
        assert np.all(np.abs(draws.mean(axis=0) - mean) < 3 * sd / math.sqrt(100_000))

    def test_bad_sigma(self):
        with pytest.raises(ValueError):
            sample_omega_given_k_sigma(Dataset([1.0, 2.0]), 1, 0.0, HyperParams(), np.random.default_rng())


class TestSigmaPosteriorMean:
    def test_matches_mc(self):
        rng = np.random.default_rng(8)
        data = Dataset(rng.normal(0, 2.0, size=25))
        hp = HyperParams(a=2.0, b=1.0)
        draws = sample_sigma2_given_k(data, 3, hp, np.random.default_rng(1), size=100_000)
        assert sigma_posterior_mean_given_k(data, 3, hp) == pytest.approx(np.sqrt(draws).mean(), rel=0.02)

    def test_scales_with_sqrt_b_tilde(self):
        rng = np.random.default_rng(8)
        y = rng.normal(size=25)
        hp = HyperParams(a=2.0, b=1.0)
        ratio = sigma_posterior_mean_given_k(Dataset(3 * y), 2, hp) / sigma_posterior_mean_given_k(Dataset(y), 2, hp)
        bt_ratio = b_tilde(Dataset(3 * y), 2, hp) / b_tilde(Dataset(y), 2, hp)
        assert ratio == pytest.approx(math.sqrt(bt_ratio), rel=1e-12)

    @settings(max_examples=50)
    @given(arrays(np.float64, st.integers(2, 20), elements=st.floats(-1e3, 1e3)), st.floats(0.01, 10))
    def test_finite_positive(self, y, a):
        v = sigma_posterior_mean_given_k(Dataset(y), 1, HyperParams(a=a))
        assert np.isfinite(v) and v > 0


class TestShiftEquivariance:
    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(-100, 100))
    def test_shift(self, seed, c):
        rng = np.random.default_rng(seed)
        y = rng.normal(size=25)
        hp = HyperParams(m=0.3, mu=0.5)
        hp_c = hp.with_(m=0.3 + c)
        d, d_c = Dataset(y), Dataset(y + c)
        for k in (2, 5):
            assert b_tilde(d_c, k, hp_c) == pytest.approx(b_tilde(d, k, hp), rel=1e-9)
            assert log_posterior_k_unnorm(d_c, k, hp_c) == pytest.approx(log_posterior_k_unnorm(d, k, hp), rel=1e-9)
            s = sample_sigma2_given_k(d, k, hp, np.random.default_rng(seed))
            s_c = sample_sigma2_given_k(d_c, k, hp_c, np.random.default_rng(seed))
            assert s_c == pytest.approx(s, rel=1e-9)
            w = sample_omega_given_k_sigma(d, k, s, hp, np.random.default_rng(seed))
            w_c = sample_omega_given_k_sigma(d_c, k, s, hp_c, np.random.default_rng(seed))
            np.testing.assert_allclose(w_c - c, w, atol=1e-9)
