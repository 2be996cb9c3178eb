import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from longmem.errors import ValidationError
from longmem.simulate import (
    ArfimaSpec,
    ArmaSpec,
    FracDiffSpec,
    MarkovSpec,
    MtdSpec,
    MultiFdSpec,
    NonlinearArSpec,
    arfima,
    arma_series,
    frac_diff_coeffs,
    frac_difference,
    frac_integrate,
    fracdiff_noise,
    markov_series,
    mtd_series,
    multivariate_fd,
    nonlinear_ar_series,
    preset_memory,
    stationary_distribution,
    trial_seed,
)


def lag1(x):
    x = np.ravel(x) - np.mean(x)
    return float(np.dot(x[:-1], x[1:]) / np.dot(x, x))


def gamma_ratio_coeffs(d, n):
    """Gamma(d + k) / (k! Gamma(d)) for d > 0, through lgamma."""
    return np.array([math.exp(math.lgamma(d + k) - math.lgamma(k + 1) - math.lgamma(d)) for k in range(n)])


STICKY = np.array([[0.9, 0.1], [0.1, 0.9]])


class TestCoefficients:
    def test_zero(self):
        np.testing.assert_array_equal(frac_diff_coeffs(0.0, 6), [1, 0, 0, 0, 0, 0])

    def test_hand_recurrence(self):
        np.testing.assert_allclose(frac_diff_coeffs(0.4, 4), [1.0, 0.4, 0.28, 0.224], rtol=1e-14)

    def test_cumulative_sum(self):
        np.testing.assert_array_equal(frac_diff_coeffs(1.0, 10), np.ones(10))

    @pytest.mark.parametrize("d", [0.1, 0.35, 0.49])
    def test_gamma_ratio(self, d):
        np.testing.assert_allclose(frac_diff_coeffs(d, 40), gamma_ratio_coeffs(d, 40), rtol=1e-12)

    def test_bad_length(self):
        with pytest.raises(ValidationError):
            frac_diff_coeffs(0.2, 0)


class TestFracDiffNoise:
    def test_zero_is_innovations(self):
        x = fracdiff_noise(FracDiffSpec(d=0.0, length=100, burn_in=0, seed=9))
        np.testing.assert_array_equal(x[:, 0], np.random.default_rng(9).standard_normal(100))

    def test_zero_with_burn_in_is_tail_of_stream(self):
        x = fracdiff_noise(FracDiffSpec(d=0.0, length=100, seed=9))
        np.testing.assert_array_equal(x[:, 0], np.random.default_rng(9).standard_normal(200)[100:])

    def test_truncated_ma_definition(self):
        T, burn = 30, 20
        x = fracdiff_noise(FracDiffSpec(d=0.3, length=T, burn_in=burn, sigma=2.0, seed=1))[:, 0]
        z = 2.0 * np.random.default_rng(1).standard_normal(T + burn)
        psi = frac_diff_coeffs(0.3, T + burn)
        ref = [sum(psi[k] * z[t - k] for k in range(t + 1)) for t in range(burn, T + burn)]
        np.testing.assert_allclose(x, ref, rtol=1e-10, atol=1e-12)

    def test_lag_one(self):
        x = fracdiff_noise(FracDiffSpec(d=0.25, length=2**14, seed=3))
        assert 0.28 <= lag1(x) <= 0.38

    def test_deterministic_and_independent(self):
        a = fracdiff_noise(FracDiffSpec(d=0.3, length=2**12, seed=5))
        b = fracdiff_noise(FracDiffSpec(d=0.3, length=2**12, seed=5))
        c = fracdiff_noise(FracDiffSpec(d=0.3, length=2**12, seed=6))
        np.testing.assert_array_equal(a, b)
        assert abs(np.corrcoef(a[:, 0], c[:, 0])[0, 1]) < 0.1

    @pytest.mark.parametrize("d", [0.5, -0.5, 0.7])
    def test_infeasible(self, d):
        with pytest.raises(ValidationError, match=r"\(-1/2, 1/2\)"):
            fracdiff_noise(FracDiffSpec(d=d, length=10))

    @pytest.mark.parametrize("kw", [dict(length=0), dict(burn_in=-1), dict(sigma=0.0)])
    def test_bad_spec(self, kw):
        with pytest.raises(ValidationError):
            fracdiff_noise(FracDiffSpec(**{"d": 0.1, "length": 10, **kw}))

    @given(st.floats(-0.45, 0.45), st.integers(0, 2**31))
    @settings(max_examples=20, deadline=None)
    def test_inverse_filter_recovers_innovations(self, d, seed):
        T = 512
        z = np.random.default_rng(seed).standard_normal(2 * T)
        path = frac_integrate(z, d)
        x = fracdiff_noise(FracDiffSpec(d=d, length=T, seed=seed))[:, 0]
        np.testing.assert_array_equal(x, path[T:])
        rec = frac_difference(path, d)
        assert np.sqrt(np.mean((rec[T:] - z[T:]) ** 2)) <= 1e-6


class TestArfima:
    def test_white_noise_passthrough(self):
        x = arfima(ArfimaSpec(length=50, burn_in=0, seed=2))
        np.testing.assert_array_equal(x[:, 0], np.random.default_rng(2).standard_normal(50))

    def test_ar_lag_one(self):
        assert 0.45 <= lag1(arfima(ArfimaSpec(ar=(0.5,), length=2**14, seed=4))) <= 0.55

    def test_arma_recursion(self):
        ar, ma, T = (0.5, -0.2), (0.3,), 40
        x = arma_series(ArmaSpec(ar=ar, ma=ma, length=T, burn_in=0, seed=8))[:, 0]
        z = np.random.default_rng(8).standard_normal(T)
        ref = np.zeros(T)
        for t in range(T):
            ref[t] = z[t] + ma[0] * (z[t - 1] if t >= 1 else 0.0)
            ref[t] += sum(ar[i] * ref[t - 1 - i] for i in range(2) if t - 1 - i >= 0)
        np.testing.assert_allclose(x, ref, rtol=1e-12, atol=1e-14)

    @pytest.mark.parametrize("ar,ma,seed", [((0.5,), (), 1), ((0.3, 0.2), (0.4,), 2), ((), (0.7,), 3)])
    def test_d_zero_equals_arma(self, ar, ma, seed):
        a = arfima(ArfimaSpec(ar=ar, ma=ma, d=0.0, length=500, seed=seed))
        b = arma_series(ArmaSpec(ar=ar, ma=ma, length=500, seed=seed))
        np.testing.assert_array_equal(a, b)

    @pytest.mark.parametrize("ar", [(1.0,), (1.2,), (0.5, 0.5)])
    def test_nonstationary_ar(self, ar):
        with pytest.raises(ValidationError, match="unit circle"):
            arfima(ArfimaSpec(ar=ar, length=10))


class TestMultivariate:
    def test_presets(self):
        np.testing.assert_array_equal(preset_memory("zero", 4), np.zeros(4))
        np.testing.assert_array_equal(preset_memory("constant", 3), np.full(3, 0.25))
        sub = preset_memory("subset", 25)
        assert np.count_nonzero(sub) == 3 and np.all(sub[:3] == 0.4)

    def test_range_preset(self):
        d = preset_memory("range", 20000, np.random.default_rng(0))
        assert d.min() > 0 and d.max() < 0.25
        assert d.mean() == pytest.approx(0.125, abs=2e-3)
        # 0.25 * Beta(2, 2) has variance 0.25^2 / 20
        assert d.var() == pytest.approx(0.0625 / 20, rel=0.05)

    def test_unknown_preset_lists_choices(self):
        with pytest.raises(ValidationError, match="zero, constant, subset, range"):
            preset_memory("uniform", 3)

    def test_range_needs_rng(self):
        with pytest.raises(ValidationError):
            preset_memory("range", 3)

    def test_columns_match_scalar(self):
        x = multivariate_fd(MultiFdSpec(d=[0.4, 0.0], length=300, burn_in=0, seed=3))
        z = np.random.default_rng(3).standard_normal((300, 2))
        np.testing.assert_allclose(x[:, 0], frac_integrate(z[:, 0], 0.4), rtol=1e-12)
        np.testing.assert_array_equal(x[:, 1], z[:, 1])

    def test_independent_coordinates(self):
        x = multivariate_fd(MultiFdSpec(d=[0.4, 0.0], length=2**14, seed=10))
        assert abs(np.corrcoef(x.T)[0, 1]) <= 0.05

    def test_preset_shape(self):
        x = multivariate_fd(MultiFdSpec(setting="constant", p=7, length=64, seed=1))
        assert x.shape == (64, 7)

    def test_needs_memory(self):
        with pytest.raises(ValidationError):
            multivariate_fd(MultiFdSpec(length=10))

    def test_trial_seeds_distinct(self):
        a = np.random.default_rng(trial_seed(1, 0)).random(4)
        b = np.random.default_rng(trial_seed(1, 1)).random(4)
        c = np.random.default_rng(trial_seed(1, 0)).random(4)
        assert not np.array_equal(a, b) and np.array_equal(a, c)


class TestChains:
    def test_stationary_distribution(self):
        P = np.array([[0.7, 0.4], [0.3, 0.6]])
        pi = stationary_distribution(P)
        np.testing.assert_allclose(P @ pi, pi, atol=1e-14)
        np.testing.assert_allclose(pi, [4 / 7, 3 / 7])

    def test_reducible(self):
        with pytest.raises(ValidationError, match="reducible"):
            stationary_distribution(np.eye(2))

    def test_not_stochastic(self):
        with pytest.raises(ValidationError, match="column-stochastic"):
            markov_series(MarkovSpec(transition=[[0.9, 0.2], [0.2, 0.8]], length=10))

    def test_fair_coin(self):
        x = markov_series(MarkovSpec(transition=np.full((2, 2), 0.5), length=2**14, seed=1))
        assert set(np.unique(x)) <= {0.0, 1.0}
        assert abs(lag1(x)) <= 0.03

    def test_sticky(self):
        x = markov_series(MarkovSpec(transition=STICKY, length=2**14, seed=2))
        assert 0.75 <= lag1(x) <= 0.85

    def test_output_map(self):
        x = markov_series(MarkovSpec(transition=STICKY, values=[-1.0, 5.0], length=100, seed=2))
        y = markov_series(MarkovSpec(transition=STICKY, length=100, seed=2))
        np.testing.assert_array_equal(x, np.where(y == 0, -1.0, 5.0))

    def test_mtd_order_one_is_markov(self):
        P = np.array([[0.6, 0.3, 0.2], [0.3, 0.5, 0.2], [0.1, 0.2, 0.6]])
        a = mtd_series(MtdSpec(weights=[1.0], matrices=[P], length=400, seed=7))
        b = markov_series(MarkovSpec(transition=P, length=400, seed=7))
        np.testing.assert_array_equal(a, b)

    def test_mtd_transition_frequencies(self):
        lam = [0.7, 0.3]
        Q1 = np.array([[0.8, 0.3], [0.2, 0.7]])
        Q2 = np.array([[0.6, 0.1], [0.4, 0.9]])
        x = mtd_series(MtdSpec(weights=lam, matrices=[Q1, Q2], length=2**16, seed=3))[:, 0].astype(int)
        # P(x_t = 0 | x_{t-1} = 1, x_{t-2} = 0) = 0.7 * 0.3 + 0.3 * 0.6
        sel = (x[1:-1] == 1) & (x[:-2] == 0)
        assert np.mean(x[2:][sel] == 0) == pytest.approx(0.7 * 0.3 + 0.3 * 0.6, abs=0.02)

    @pytest.mark.parametrize("weights", [[0.5, 0.4], [1.2, -0.2], []])
    def test_mtd_bad_weights(self, weights):
        with pytest.raises(ValidationError):
            mtd_series(MtdSpec(weights=weights, matrices=[STICKY] * len(weights), length=10))

    def test_mtd_needs_positive_diagonal(self):
        Q = np.array([[0.0, 1.0], [1.0, 0.0]])
        with pytest.raises(ValidationError, match="diagonal"):
            mtd_series(MtdSpec(weights=[0.5, 0.5], matrices=[Q, STICKY], length=10))

    def test_deterministic(self):
        spec = MtdSpec(weights=[0.6, 0.4], matrices=[STICKY, STICKY.T], length=300, seed=4)
        np.testing.assert_array_equal(mtd_series(spec), mtd_series(spec))


class TestNonlinear:
    @pytest.mark.parametrize("kind", ["tanh", "sine"])
    def test_recursion(self, kind):
        x = nonlinear_ar_series(NonlinearArSpec(kind=kind, a=0.5, b=0.4, length=30, burn_in=0, seed=1))[:, 0]
        eps = np.random.default_rng(1).standard_normal(30)
        f = math.tanh if kind == "tanh" else math.sin
        prev, ref = 0.0, []
        for e in eps:
            prev = 0.5 * f(prev) + 0.4 * prev + e
            ref.append(prev)
        np.testing.assert_allclose(x, ref, rtol=1e-14)

    def test_unstable(self):
        with pytest.raises(ValidationError):
            nonlinear_ar_series(NonlinearArSpec(b=1.0, length=10))

    def test_unknown_kind(self):
        with pytest.raises(ValidationError):
            nonlinear_ar_series(NonlinearArSpec(kind="relu", length=10))

    def test_bounded_variance(self):
        x = nonlinear_ar_series(NonlinearArSpec(length=2**14, seed=3))
        assert np.isfinite(x).all() and x.std() < 5
