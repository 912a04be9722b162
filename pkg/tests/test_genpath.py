import logging
import math

import numpy as np
import pytest

from maxminlab import dependence as dep
from maxminlab import genpath as gp
from maxminlab.genpath import sample_autocorrelation as acf

N_BIG = 10**6


def rng(i=0, stream=0, seed=2024):
    return gp.replicate_rng(seed, i, stream)


class TestIid:
    def test_lag1_and_variance(self):
        x = gp.generate_iid(N_BIG, rng()).values
        assert abs(acf(x, 1)) < 3 / math.sqrt(N_BIG)
        assert abs(x.var() - 1) < 3 * math.sqrt(2 / N_BIG)

    def test_deterministic(self):
        a = gp.generate_iid(1000, rng(7)).values
        b = gp.generate_iid(1000, rng(7)).values
        assert a.tobytes() == b.tobytes()
        c = gp.generate_iid(1000, rng(8)).values
        assert not np.array_equal(a, c)

    def test_zero_length_rejected(self):
        with pytest.raises(ValueError):
            gp.generate_iid(0, rng())


class TestAr1:
    def test_phi_zero_is_white(self):
        x = gp.generate_ar1(N_BIG, 0.0, rng()).values
        assert abs(acf(x, 1)) < 3 / math.sqrt(N_BIG)

    def test_lags(self):
        x = gp.generate_ar1(N_BIG, 0.5, rng()).values
        assert acf(x, 1) == pytest.approx(0.5, abs=0.005)
        assert acf(x, 3) == pytest.approx(0.125, abs=0.005)

    def test_stationary_start(self):
        # X_1 is standard normal across replicates, not just in the long run
        first = np.array([gp.generate_ar1(5, 0.9, rng(i)).values[0] for i in range(4000)])
        assert abs(first.mean()) < 5 / math.sqrt(4000)
        assert abs(first.var() - 1) < 5 * math.sqrt(2 / 4000)

    def test_bad_phi(self):
        with pytest.raises(ValueError):
            gp.generate_ar1(10, 1.0, rng())


class TestCirculant:
    def test_iid_is_white(self):
        x = gp.generate_circulant(N_BIG, dep.iid(), rng()).values
        for k in (1, 2, 5, 10):
            assert abs(acf(x, k)) < 3 / math.sqrt(N_BIG)

    def test_matches_ar1_sampler(self):
        m = dep.ar1(0.5)
        x = gp.generate_circulant(N_BIG, m, rng(stream=0)).values
        y = gp.generate_ar1(N_BIG, 0.5, rng(stream=1)).values
        for k in range(1, 11):
            assert acf(x, k) == pytest.approx(0.5**k, abs=0.005)
            assert abs(acf(x, k) - acf(y, k)) < 0.01

    def test_power_decay_lag10(self):
        # c = 1 is not embeddable (see test below); c = 0.5 gives rho_10 = 0.5 * 10**-0.75
        m = dep.power_decay(0.5, 0.75)
        x = gp.generate_circulant(10**5, m, rng()).values
        assert acf(x, 10) == pytest.approx(0.5 * 10**-0.75, abs=0.01)

    def test_non_embeddable_model_fails(self):
        # rho_1 is capped just below 1 while rho_2 = 2**-0.75: not a covariance
        with pytest.raises(gp.EmbeddingFailure) as err:
            gp.generate_circulant(10**4, dep.power_decay(1, 0.75), rng())
        assert err.value.min_eig < -1e-8 * err.value.max_eig
        assert "power(c=1,alpha=0.75)" in str(err.value)

    def test_tiny_negative_eigenvalues_clipped(self, caplog, monkeypatch):
        real_rfft = np.fft.rfft

        def noisy(row):
            lam = real_rfft(row)
            lam[3] = -1e-10 * lam.real.max()
            return lam

        gp.circulant_sqrt_eigenvalues.cache_clear()
        monkeypatch.setattr(gp.np.fft, "rfft", noisy)
        with caplog.at_level(logging.WARNING, logger="maxminlab.genpath"):
            sq = gp.circulant_sqrt_eigenvalues(dep.ar1(0.3), 64)
        gp.circulant_sqrt_eigenvalues.cache_clear()
        assert sq[3] == 0.0
        assert "clipping" in caplog.text

    @pytest.mark.parametrize("n", [1, 2, 3, 17])
    def test_small_n(self, n):
        x = gp.generate_circulant(n, dep.ar1(0.5), rng()).values
        assert x.shape == (n,)

    def test_small_n_covariance(self):
        # n = 2 uses the explicit factor; check its correlation
        xs = np.array([gp.generate_circulant(2, dep.ar1(0.6), rng(i)).values for i in range(20000)])
        assert np.corrcoef(xs.T)[0, 1] == pytest.approx(0.6, abs=0.02)


@pytest.mark.parametrize(
    "model", [dep.iid(), dep.ar1(0.7), dep.power_decay(0.5, 0.75), dep.log_decay(0.5)],
    ids=lambda m: m.label,
)
def test_marginal_standardization(model):
    # pooled over many short replicates: mean 0, variance 1 within 5 standard errors
    n, reps = 1000, 1000
    xs = np.concatenate([gp.generate_path(model, n, rng(i)).values for i in range(reps)])
    # short-range dependence inflates the variance of the pooled mean; replicate means are iid
    rep_means = xs.reshape(reps, n).mean(axis=1)
    assert abs(rep_means.mean()) < 5 * rep_means.std(ddof=1) / math.sqrt(reps)
    rep_vars = (xs.reshape(reps, n) ** 2).mean(axis=1)
    assert abs(rep_vars.mean() - 1) < 5 * rep_vars.std(ddof=1) / math.sqrt(reps)


def test_replicate_streams_independent_of_order():
    forward = [gp.generate_path(dep.ar1(0.5), 50, rng(i)).values for i in range(10)]
    backward = [gp.generate_path(dep.ar1(0.5), 50, rng(i)).values for i in reversed(range(10))]
    for a, b in zip(forward, reversed(backward)):
        assert a.tobytes() == b.tobytes()
