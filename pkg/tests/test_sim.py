import math

import numpy as np
import pytest

from mimopower.model import SystemConfig
from mimopower.sim import (
    ALL_SCHEMES,
    MAXMIN_DATA,
    MAXMIN_JOINT,
    NO_CONTROL,
    SUM_DATA,
    SUM_JOINT,
    CdfSummary,
    DropConfig,
    compute_emax,
    drop_users,
    empirical_cdf,
    run_campaign,
)


class TestDropConfig:
    @pytest.mark.parametrize(
        "kw",
        [
            dict(min_distance=0.0),
            dict(min_distance=600.0),
            dict(pathloss_exponent=2.0),
            dict(num_drops=0),
            dict(edge_snr_linear=0.0),
        ],
    )
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            DropConfig(**kw)


class TestDropUsers:
    def test_support(self, rng):
        cfg = DropConfig()
        fading, r = drop_users(rng, cfg, 1000)
        assert np.all(r >= 100.0) and np.all(r <= 500.0)
        # edge-normalized coefficients: cell edge maps to 1
        assert np.all(fading.beta >= 1.0)
        np.testing.assert_allclose(fading.beta, (500.0 / r) ** 3.76, rtol=1e-12)

    def test_median_distance(self, rng):
        cfg = DropConfig()
        _, r = drop_users(rng, cfg, 100_000)
        target = math.sqrt((100.0**2 + 500.0**2) / 2.0)  # ~360.6 m
        assert np.median(r) == pytest.approx(target, rel=0.01)

    def test_fixed_seed_reproducible(self):
        cfg = DropConfig()
        f1, r1 = drop_users(np.random.default_rng(42), cfg, 10)
        f2, r2 = drop_users(np.random.default_rng(42), cfg, 10)
        np.testing.assert_array_equal(r1, r2)
        np.testing.assert_array_equal(f1.beta, f2.beta)


class TestComputeEmax:
    def test_reference_value(self):
        assert compute_emax(DropConfig(), 200) == pytest.approx(20.0)

    def test_edge_snr_under_equal_power(self):
        # E_max/T = 0.1 with beta_edge = 1 means -10 dB per symbol at the edge
        assert compute_emax(DropConfig(), 200) / 200 == pytest.approx(0.1)

    def test_zero_edge_snr_rejected(self):
        with pytest.raises(ValueError):
            DropConfig(edge_snr_linear=0.0)

    def test_degenerate_budget_rejected_downstream(self):
        with pytest.raises(ValueError):
            SystemConfig(M=10, K=2, T=20, tau_p=2, E_max=0.0)


class TestRunCampaign:
    def test_no_control_only(self):
        cfg = DropConfig(num_drops=10, seed=3)
        results = run_campaign(cfg, M=20, K=2, T=20, schemes=(NO_CONTROL,))
        assert len(results) == 1
        assert results[0].scheme == NO_CONTROL
        assert len(results[0].records) == 10
        for rec in results[0].records:
            assert rec.se.size == 2
            assert rec.sum_se == pytest.approx(float(rec.se.sum()))
            assert rec.min_se == pytest.approx(float(rec.se.min()))

    def test_unknown_scheme(self):
        with pytest.raises(ValueError):
            run_campaign(DropConfig(num_drops=1), M=10, K=2, T=20, schemes=("Genie",))

    def test_paired_dominance(self):
        cfg = DropConfig(num_drops=8, seed=11)
        results = {
            r.scheme: r
            for r in run_campaign(cfg, M=50, K=4, T=60, schemes=ALL_SCHEMES)
        }
        for i in range(8):
            recs = {s: results[s].records[i] for s in ALL_SCHEMES}
            # all schemes see the same drop index (pairing)
            assert len({r.drop for r in recs.values()}) == 1
            tol = 1e-6
            assert recs[SUM_JOINT].sum_se >= recs[NO_CONTROL].sum_se * (1 - tol)
            assert recs[SUM_JOINT].sum_se >= recs[SUM_DATA].sum_se * (1 - tol)
            assert recs[SUM_DATA].sum_se >= recs[NO_CONTROL].sum_se * (1 - tol)
            assert recs[MAXMIN_JOINT].min_se >= recs[MAXMIN_DATA].min_se * (1 - tol)
            assert recs[MAXMIN_DATA].min_se >= recs[NO_CONTROL].min_se * (1 - tol)

    def test_reproducible(self):
        cfg = DropConfig(num_drops=4, seed=9)
        a = run_campaign(cfg, M=30, K=3, T=40, schemes=(MAXMIN_JOINT,))
        b = run_campaign(cfg, M=30, K=3, T=40, schemes=(MAXMIN_JOINT,))
        for ra, rb in zip(a[0].records, b[0].records):
            np.testing.assert_array_equal(ra.se, rb.se)
            np.testing.assert_array_equal(ra.p_p, rb.p_p)
            np.testing.assert_array_equal(ra.p_u, rb.p_u)

    def test_worker_count_does_not_change_results(self):
        cfg = DropConfig(num_drops=6, seed=5)
        a = run_campaign(cfg, M=30, K=3, T=40, schemes=(MAXMIN_JOINT,), workers=1)
        b = run_campaign(cfg, M=30, K=3, T=40, schemes=(MAXMIN_JOINT,), workers=2)
        for ra, rb in zip(a[0].records, b[0].records):
            np.testing.assert_array_equal(ra.se, rb.se)

    def test_se_support_bound(self):
        cfg = DropConfig(num_drops=5, seed=21)
        K, T, M = 3, 40, 30
        results = run_campaign(cfg, M=M, K=K, T=T, schemes=ALL_SCHEMES)
        E = compute_emax(cfg, T)
        # coarse upper bound: full budget on both phases, strongest possible
        # coefficient is bounded by the minimum-distance user
        beta_max = (cfg.cell_radius / cfg.min_distance) ** cfg.pathloss_exponent
        sinr_upper = (M - 1) * (E / (T - K)) * (E / K) * beta_max**2 * K
        bound = (1 - K / T) * math.log2(1 + sinr_upper)
        for res in results:
            for rec in res.records:
                assert np.all(rec.se >= 0.0)
                assert np.all(rec.se <= bound)


class TestCdfSummary:
    def test_percentile_uniform_grid(self):
        cdf = empirical_cdf(np.arange(1, 101))
        assert cdf.percentile(0.05) == 5.0
        assert cdf.likely95 == 5.0
        assert cdf.median == 50.0
        assert cdf.percentile(1.0) == 100.0

    def test_single_value(self):
        cdf = empirical_cdf([3.25])
        for p in (0.0, 0.05, 0.5, 1.0):
            assert cdf.percentile(p) == 3.25

    def test_sorted_and_monotone(self, rng):
        cdf = empirical_cdf(rng.normal(size=200))
        assert np.all(np.diff(cdf.values) >= 0)
        ps = np.linspace(0, 1, 21)
        qs = [cdf.percentile(p) for p in ps]
        assert all(a <= b for a, b in zip(qs, qs[1:]))

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            empirical_cdf([])

    def test_bad_level(self):
        cdf = empirical_cdf([1.0, 2.0])
        with pytest.raises(ValueError):
            cdf.percentile(1.5)

    def test_values_frozen(self):
        cdf = empirical_cdf([2.0, 1.0])
        with pytest.raises(ValueError):
            cdf.values[0] = 0.0
