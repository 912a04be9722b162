import itertools
import math

import numpy as np
import pytest
from scipy.stats import norm

from maxminlab import dependence as dep
from maxminlab import engine as eg
from maxminlab import limitlaw as ll
from maxminlab import missing as ms
from oracles import binomial_oracle

INF = math.inf
Q = ll.ThresholdQuad


def cfg(corr=None, miss=None, n=200, reps=2000, quads=(), seed=11, workers=1):
    return eg.ExperimentConfig(
        corr or dep.iid(), miss or ms.iid_bernoulli(0.5), n, reps, list(quads), seed, workers
    )


def quad_grid(count, seed=0):
    """Random quads with a tight inner max/min (Gaussian convention: y2 <= y1)."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        x2 = rng.uniform(-1.0, 1.5)
        y2 = rng.uniform(-1.0, 1.5)
        out.append(Q(x2, y2, x2 + rng.uniform(0, 2), y2 + rng.uniform(0, 2)))
    return out


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError, match="n"):
            cfg(n=2)
        with pytest.raises(ValueError, match="reps"):
            cfg(reps=0)


class TestRunExperiment:
    def test_single_replicate(self):
        res = eg.run_experiment(cfg(reps=1, quads=quad_grid(5)))
        assert all(r.empirical in (0.0, 1.0) for r in res.rows)

    def test_complete_sample_single_event(self):
        x, y = 0.5, 0.2
        c = cfg(miss=ms.iid_bernoulli(1.0), n=500, reps=3000, quads=[Q(x, y, x, y)])
        res = eg.run_experiment(c)
        s = res.sample
        u, v = s.nc.a_n * x + s.nc.b_n, -s.nc.c_n * y - s.nc.d_n
        freq = np.mean((s.raw[:, 3] > v) & (s.raw[:, 2] <= u))
        row = res.rows[0]
        assert row.empirical == freq
        assert row.theoretical == pytest.approx(math.exp(-math.exp(-x) - math.exp(-y)), abs=1e-14)

    def test_row_fields(self):
        res = eg.run_experiment(cfg(quads=quad_grid(3)))
        for r in res.rows:
            assert r.std_err == pytest.approx(math.sqrt(r.empirical * (1 - r.empirical) / 2000))
            assert r.abs_dev == abs(r.empirical - r.theoretical)
            assert r.dev_in_se == (r.abs_dev / r.std_err if r.std_err > 0 else INF)

    def test_workers_do_not_change_results(self):
        base = dict(corr=dep.ar1(0.5), miss=ms.exchangeable(ms.beta(2, 2)), reps=300, quads=quad_grid(8))
        one = eg.run_experiment(cfg(workers=1, **base))
        many = eg.run_experiment(cfg(workers=3, **base))
        assert one.estimates_csv() == many.estimates_csv()
        assert one.raw_csv() == many.raw_csv()

    def test_seed_changes_results(self):
        a = eg.run_experiment(cfg(seed=1, quads=quad_grid(3)))
        b = eg.run_experiment(cfg(seed=2, quads=quad_grid(3)))
        assert not np.array_equal(a.sample.raw, b.sample.raw)

    def test_generation_error_carries_replicate(self):
        with pytest.raises(eg.GenerationError) as err:
            eg.simulate(cfg(corr=dep.power_decay(1, 0.75), n=500, reps=3))
        assert err.value.replicate == 0
        assert "circulant embedding failed" in str(err.value)

    def test_event_nesting(self):
        res = eg.run_experiment(cfg(miss=ms.exchangeable(ms.uniform()), reps=2000))
        s = res.sample
        prev = None
        # shrink the inner intervals step by step
        for t in np.linspace(2.0, -1.0, 7):
            e = s.event(Q(t, t, 2.5, 2.5)).mean()
            if prev is not None:
                assert e <= prev
            prev = e

    def test_empty_replicates_satisfy_inner_event(self):
        n = 50
        c = cfg(miss=ms.deterministic_pattern([0] * n), n=n, reps=500)
        s = eg.simulate(c)
        assert s.empty_count == 500
        q = Q(-3.0, -3.0, 1.0, 1.0)
        outer = Q(1.0, 1.0, 1.0, 1.0)
        assert s.event(q).mean() == s.event(outer).mean()

    def test_csv_formats(self):
        res = eg.run_experiment(cfg(reps=5, quads=[Q(0, 0, 1, 1)], miss=ms.iid_bernoulli(0.0)))
        lines = res.estimates_csv().splitlines()
        assert lines[0] == eg.ESTIMATE_HEADER
        raw = res.raw_csv().splitlines()
        assert raw[0] == eg.RAW_HEADER
        fields = raw[1].split(",")
        assert fields[1] == "-inf" and fields[2] == "inf" and fields[5] == "0"


class TestIidOracle:
    def test_everything_allowed(self):
        assert eg.iid_oracle(100, INF, -INF, INF, -INF, ms.iid_bernoulli(0.3)) == pytest.approx(1.0)

    def test_single_observed_point(self):
        got = eg.iid_oracle(1, 0.7, -0.2, 2.0, -2.0, ms.iid_bernoulli(1.0))
        assert got == pytest.approx(norm.cdf(0.7) - norm.cdf(-0.2), abs=1e-15)

    def test_binomial_example(self):
        got = eg.iid_oracle(10, 1, -1, 2, -2, ms.iid_bernoulli(0.5))
        a, b = norm.cdf(1) - norm.cdf(-1), norm.cdf(2) - norm.cdf(-2)
        assert got == pytest.approx(binomial_oracle(10, 0.5, a, b), abs=1e-14)
        assert got == pytest.approx(0.13511041536466956, abs=1e-14)

    def test_large_n_binomial_closed_form(self):
        a, b = 0.99, 0.999
        n, p = 20000, 0.3
        u2, u1 = norm.ppf(a), norm.ppf(b)
        got = eg.iid_oracle(n, u2, -INF, u1, -INF, ms.iid_bernoulli(p))
        assert got == pytest.approx((p * a + (1 - p) * b) ** n, rel=1e-9)

    def test_markov_brute_force(self):
        n, p01, p10 = 6, 0.3, 0.6
        model = ms.two_state_markov(p01, p10)
        u2, v2, u1, v1 = 0.5, -0.5, 1.5, -1.5
        a = norm.cdf(u2) - norm.cdf(v2)
        b = norm.cdf(u1) - norm.cdf(v1)
        pi1 = p01 / (p01 + p10)
        trans = {(0, 0): 1 - p01, (0, 1): p01, (1, 0): p10, (1, 1): 1 - p10}
        total = 0.0
        for seq in itertools.product((0, 1), repeat=n):
            pr = pi1 if seq[0] else 1 - pi1
            for s, t in zip(seq, seq[1:]):
                pr *= trans[(s, t)]
            k = sum(seq)
            total += pr * a**k * b ** (n - k)
        assert eg.iid_oracle(n, u2, v2, u1, v1, model) == pytest.approx(total, abs=1e-14)

    def test_exchangeable_quadrature_vs_mc(self):
        m = ms.exchangeable(ms.uniform())
        args = (1000, 3.0, -3.0, 3.8, -3.8)
        exact = eg.iid_oracle(*args, m)
        mc = eg.iid_oracle(*args, m, mc_over_p=200000, rng=np.random.default_rng(0))
        assert mc == pytest.approx(exact, abs=3e-3)
        mb = ms.exchangeable(ms.beta(0.5, 2))
        assert eg.iid_oracle(*args, mb, mc_over_p=200000, rng=np.random.default_rng(1)) == pytest.approx(
            eg.iid_oracle(*args, mb), abs=3e-3
        )

    def test_pattern_exact(self):
        m = ms.deterministic_pattern([1, 0, 1, 1])
        a = norm.cdf(1) - norm.cdf(-1)
        b = norm.cdf(2) - norm.cdf(-2)
        assert eg.iid_oracle(4, 1, -1, 2, -2, m) == pytest.approx(a**3 * b, abs=1e-15)

    def test_rejects_dependent_model(self):
        with pytest.raises(ValueError, match="iid"):
            eg.iid_oracle(10, 1, -1, 2, -2, ms.iid_bernoulli(0.5), correlation=dep.ar1(0.5))


@pytest.mark.parametrize(
    "miss",
    [
        ms.iid_bernoulli(0.5),
        ms.exchangeable(ms.uniform()),
        ms.two_state_markov(0.05, 0.1),
        ms.deterministic_pattern(*[[int(c) for c in np.random.default_rng(i).integers(0, 2, 300)] for i in range(3)]),
    ],
    ids=lambda m: m.kind,
)
def test_oracle_equivalence(miss):
    # one independent sample per quad so the 3-SE hits are independent trials
    n, reps = 300, 2000
    quads = quad_grid(20, seed=5)
    inside = 0
    for i, q in enumerate(quads):
        res = eg.run_experiment(cfg(miss=miss, n=n, reps=reps, quads=[q], seed=100 + i))
        row = res.rows[0]
        oracle = eg.iid_oracle(n, *res.sample.raw_thresholds(q), miss)
        inside += abs(row.empirical - oracle) <= 3 * row.std_err
    assert inside >= 0.95 * len(quads)


class TestIndependenceGap:
    def test_degenerate(self):
        s = eg.simulate(cfg(reps=500))
        assert eg.independence_gap(s, INF, INF) == 0.0

    @pytest.mark.slow
    @pytest.mark.parametrize("p", [1.0, 0.5])
    def test_constant_p_small_gap(self, p):
        s = eg.simulate(cfg(miss=ms.iid_bernoulli(p), n=10**5, reps=20000, seed=p > 0.7))
        assert eg.independence_gap(s, 0.0, 0.0) <= 0.02


class TestDifferenceStatistic:
    def test_complete_sample_zero(self):
        s = eg.simulate(cfg(miss=ms.iid_bernoulli(1.0), reps=300))
        d = eg.difference_statistic(s)
        assert np.all(d.min_diff == 0) and np.all(d.max_diff == 0)
        assert d.excluded == 0 and np.all(d.min_diff_ecdf == 1.0)

    def test_nonnegative_and_exclusions(self):
        s = eg.simulate(cfg(miss=ms.iid_bernoulli(0.01), n=100, reps=1000))
        d = eg.difference_statistic(s)
        assert d.excluded == s.empty_count > 0
        assert d.used + d.excluded == 1000
        assert np.all(d.min_diff >= 0) and np.all(d.max_diff >= 0)
        assert np.all(np.diff(d.min_diff_ecdf) >= 0)
        assert set(d.quantiles) == {"min_diff", "normalized_min", "max_diff", "normalized_max"}

    @pytest.mark.slow
    def test_stable_across_seeds(self):
        reps = 3000
        eps = math.sqrt(math.log(2 / 0.05) / (2 * reps))
        ds = [
            eg.difference_statistic(eg.simulate(cfg(miss=ms.iid_bernoulli(0.5), n=10**5, reps=reps, seed=s)))
            for s in (21, 22)
        ]
        assert np.max(np.abs(ds[0].min_diff_ecdf - ds[1].min_diff_ecdf)) <= 2 * eps
        assert np.max(np.abs(ds[0].max_diff_ecdf - ds[1].max_diff_ecdf)) <= 2 * eps


class TestSweep:
    def test_structure_and_trend_helper(self):
        pts = eg.convergence_sweep(cfg(reps=500, quads=quad_grid(4)), [50, 500])
        assert [p.n for p in pts] == [50, 500]
        assert all(p.max_abs_dev == max(r.abs_dev for r in p.result.rows) for p in pts)
        with pytest.raises(ValueError):
            eg.convergence_sweep(cfg(quads=quad_grid(1)), [500, 50])

    def test_nonincreasing_within(self):
        P = eg.SweepPoint
        q = Q(0, 0, 0, 0)
        ok = [P(10, 0.1, 0.01, q, None), P(100, 0.11, 0.01, q, None), P(1000, 0.05, 0.01, q, None)]
        assert eg.nonincreasing_within(ok)
        bad = [P(10, 0.1, 0.01, q, None), P(100, 0.2, 0.01, q, None)]
        assert not eg.nonincreasing_within(bad)

    def test_converges_to_oracle_at_fixed_n(self):
        n, q = 1000, Q(0.0, 0.0, 1.0, 1.0)
        miss = ms.iid_bernoulli(0.5)
        res = eg.run_experiment(cfg(miss=miss, n=n, reps=20000, quads=[q], seed=8))
        row = res.rows[0]
        oracle = eg.iid_oracle(n, *res.sample.raw_thresholds(q), miss)
        assert abs(row.empirical - oracle) <= 3 * row.std_err
