import math

import numpy as np
import pytest
from scipy import integrate, stats
from scipy.spatial import cKDTree

from sgcell.errors import DomainError, ValidationError
from sgcell.geometry import (
    AnnularRegion,
    NetworkConfig,
    Tier,
    TierSet,
    cell_load_pmf,
    channel_access_probability,
    default_outer_radius,
    joint_nearest_nth_pdf,
    nearest_distance_cdf,
    nearest_distance_pdf,
    sample_nearest_distance,
    sample_ordered_distances,
    sample_ppp,
    sample_tier_service_distance,
    tier_association_probability,
    tier_service_distance_pdf,
)
from sgcell.numerics import ks_distance


class TestConfigTypes:
    def test_eta_must_exceed_two(self):
        with pytest.raises(DomainError):
            NetworkConfig(1e-6, eta=2.0)

    @pytest.mark.parametrize("kw", [dict(lambda_bs=0), dict(lambda_bs=1e-6, power=0),
                                    dict(lambda_bs=1e-6, noise=-1)])
    def test_positivity(self, kw):
        with pytest.raises(ValidationError):
            NetworkConfig(**kw)

    def test_with(self):
        c = NetworkConfig(1e-6).with_(eta=3.0)
        assert c.eta == 3.0 and c.delta == pytest.approx(2 / 3)

    def test_empty_tierset(self):
        with pytest.raises(DomainError):
            TierSet([])

    def test_region(self):
        with pytest.raises(ValidationError):
            AnnularRegion(5.0, 5.0)
        assert AnnularRegion(0, 1).area == pytest.approx(math.pi)

    def test_outer_radius_rule(self):
        lam = 1e-6
        R = default_outer_radius(lam, 250.0)
        assert R == pytest.approx(30 / math.sqrt(math.pi * lam))
        assert default_outer_radius(lam, 5000.0) == 1e5


class TestPPP:
    def test_empty(self):
        pts = sample_ppp(0.0, AnnularRegion(0, 100), np.random.default_rng(0))
        assert pts.shape == (0, 2)

    def test_mean_count(self):
        rng = np.random.default_rng(1)
        region = AnnularRegion(250.0, 1e4)
        counts = np.array([len(sample_ppp(1e-6, region, rng)) for _ in range(10_000)])
        mu = math.pi * 1e-6 * (1e8 - 62500)
        assert mu == pytest.approx(313.96, abs=0.01)
        assert abs(counts.mean() - mu) < 3 * math.sqrt(mu / counts.size)
        assert counts.var() == pytest.approx(counts.mean(), rel=0.05)

    def test_points_inside_annulus(self):
        pts = sample_ppp(1e-4, AnnularRegion(50.0, 200.0), np.random.default_rng(2))
        r = np.hypot(pts[:, 0], pts[:, 1])
        assert r.min() >= 50.0 and r.max() <= 200.0

    def test_nearest_point_distribution(self):
        lam, R = 1e-6, 3000.0
        rng = np.random.default_rng(3)
        d = []
        while len(d) < 100_000:
            pts = sample_ppp(lam, AnnularRegion(0.0, R), rng)
            if len(pts):
                d.append(np.hypot(pts[:, 0], pts[:, 1]).min())
        d = np.sort(d)
        # conditioned on at least one point inside R
        norm = nearest_distance_cdf(lam, R)
        emp = lambda x: np.searchsorted(d, x, side="right") / d.size
        ks = ks_distance(emp, lambda x: nearest_distance_cdf(lam, x) / norm, np.linspace(0, R, 400))
        assert ks < 0.01


class TestNearestDistance:
    def test_zero(self):
        assert nearest_distance_pdf(1e-6, 0.0) == 0.0

    def test_median(self):
        lam = 1e-6
        med = math.sqrt(math.log(2) / (math.pi * lam))
        assert med == pytest.approx(469.7, abs=0.05)
        assert nearest_distance_cdf(lam, med) == pytest.approx(0.5, abs=1e-12)

    def test_mean(self):
        lam = 1e-6
        m, _ = integrate.quad(lambda r: r * nearest_distance_pdf(lam, r), 0, np.inf)
        assert m == pytest.approx(500.0, rel=1e-8)

    def test_sampler(self):
        lam = 1e-6
        s = np.sort(sample_nearest_distance(lam, np.random.default_rng(4), 100_000))
        emp = lambda x: np.searchsorted(s, x, side="right") / s.size
        assert ks_distance(emp, lambda x: nearest_distance_cdf(lam, x), np.linspace(0, 2500, 500)) < 0.01


class TestJointPdf:
    lam = 1e-6

    def test_ordering(self):
        with pytest.raises(DomainError):
            joint_nearest_nth_pdf(self.lam, 2, 300.0, 200.0)

    @pytest.mark.parametrize("n", [1, 2, 4])
    def test_normalisation(self, n):
        lam = self.lam
        v, _ = integrate.dblquad(lambda x, y: joint_nearest_nth_pdf(lam, n, x, y),
                                 0, 6000, lambda y: 0.0, lambda y: y, epsabs=1e-12, epsrel=1e-10)
        assert v == pytest.approx(1.0, abs=1e-6)

    def test_marginal_is_nearest_pdf(self):
        lam = self.lam
        for x in np.linspace(50, 1500, 10):
            m, _ = integrate.quad(lambda y: joint_nearest_nth_pdf(lam, 2, x, y), x, np.inf,
                                  epsabs=1e-16, epsrel=1e-11)
            assert m == pytest.approx(nearest_distance_pdf(lam, x), rel=1e-6)


class TestOrderedDistances:
    def test_first_matches_nearest(self):
        lam = 1e-6
        d = np.sort(sample_ordered_distances(lam, 1, np.random.default_rng(5), 100_000)[:, 0])
        emp = lambda x: np.searchsorted(d, x, side="right") / d.size
        assert ks_distance(emp, lambda x: nearest_distance_cdf(lam, x), np.linspace(0, 2500, 500)) < 0.01

    def test_ascending(self):
        d = sample_ordered_distances(1e-6, 6, np.random.default_rng(6), 1_000_000 // 6)
        assert np.all(np.diff(d, axis=1) > 0)

    def test_gamma_means(self):
        lam = 1e-6
        d = sample_ordered_distances(lam, 5, np.random.default_rng(7), 100_000)
        u = math.pi * lam * d ** 2
        for k in range(5):
            assert abs(u[:, k].mean() - (k + 1)) < 3 * math.sqrt((k + 1) / u.shape[0])


class TestLoad:
    def test_no_users(self):
        assert cell_load_pmf(1e-6, 1e-15, 0) == pytest.approx(1.0, abs=1e-8)

    def test_normalisation_and_mean(self):
        n = np.arange(0, 400)
        p = cell_load_pmf(1.0, 7.0, n)
        assert p.sum() == pytest.approx(1.0, abs=1e-9)
        assert (n * p).sum() == pytest.approx(7.0, rel=1e-6)

    def test_access_limits(self):
        assert channel_access_probability(1.0, 1e-9, 4) < 1e-8
        assert channel_access_probability(1.0, 1e4, 4) == pytest.approx(1.0, abs=1e-9)

    def test_access_vs_voronoi(self):
        # one dense realization on a torus: users counted per Voronoi cell
        rng = np.random.default_rng(8)
        L = 1000.0
        bs = rng.random((rng.poisson(L * L), 2)) * L
        ue = rng.random((rng.poisson(2 * L * L), 2)) * L
        _, owner = cKDTree(bs, boxsize=L).query(ue)
        k = np.bincount(owner, minlength=len(bs))
        emp = np.mean(np.minimum(k, 4) / 4)
        assert abs(emp - channel_access_probability(1.0, 2.0, 4)) < 1e-3


class TestTiers:
    def test_single(self):
        assert tier_association_probability(TierSet([(1e-6, 10.0)]), 0) == 1.0

    def test_identical_pair(self):
        ts = TierSet([(1e-6, 10.0), (1e-6, 10.0)])
        assert tier_association_probability(ts, 0) == pytest.approx(0.5)

    def test_reference_value(self):
        ts = TierSet([Tier(1e-6, 50.0), Tier(2e-6, 1.0)])
        ref = math.sqrt(50) / (math.sqrt(50) + 2)
        assert ref == pytest.approx(0.7796, abs=1e-4)
        assert tier_association_probability(ts, 0) == pytest.approx(ref, rel=1e-12)
        assert tier_association_probability(ts, 0, force_integral=True) == pytest.approx(ref, rel=1e-8)

    def test_association_counts(self):
        ts = TierSet([Tier(1e-6, 50.0), Tier(2e-6, 1.0)])
        rng = np.random.default_rng(9)
        n = 200_000
        r1 = sample_nearest_distance(1e-6, rng, n)
        r2 = sample_nearest_distance(2e-6, rng, n)
        frac = np.mean(50.0 * r1 ** -4.0 > 1.0 * r2 ** -4.0)
        assert abs(frac - tier_association_probability(ts, 0)) < 3 * math.sqrt(0.18 / n)

    def test_index_errors(self):
        with pytest.raises(DomainError):
            tier_association_probability(TierSet([(1e-6, 1.0)]), 3)

    def test_sums_to_one_mixed_eta(self):
        ts = TierSet([Tier(1e-6, 40.0, 1.0, 3.5), Tier(3e-6, 2.0, 4.0, 4.0), Tier(5e-6, 0.5, 1.0, 3.0)])
        s = sum(tier_association_probability(ts, k) for k in range(3))
        assert s == pytest.approx(1.0, abs=1e-6)

    def test_single_tier_distance_pdf(self):
        ts = TierSet([(1e-6, 10.0)])
        x = np.linspace(0, 2000, 20)
        assert np.allclose(tier_service_distance_pdf(ts, 0, x), nearest_distance_pdf(1e-6, x), rtol=1e-12)

    @pytest.mark.parametrize("k", [0, 1])
    def test_distance_pdf_normalises(self, k):
        ts = TierSet([Tier(1e-6, 50.0, 1.0, 4.0), Tier(2e-6, 1.0, 10.0, 3.0)])
        v, _ = integrate.quad(lambda x: tier_service_distance_pdf(ts, k, x), 0, np.inf, limit=200)
        assert v == pytest.approx(1.0, abs=1e-6)

    def test_service_distance_sampler(self):
        ts = TierSet([Tier(1e-6, 50.0), Tier(2e-6, 1.0, 10.0)])
        rng = np.random.default_rng(10)
        n = 200_000
        r1 = sample_nearest_distance(1e-6, rng, n)
        r2 = sample_nearest_distance(2e-6, rng, n)
        sel = 50.0 * r1 ** -4.0 >= 10.0 * r2 ** -4.0
        emp_d = np.sort(r1[sel])
        emp = lambda x: np.searchsorted(emp_d, x, side="right") / emp_d.size
        cdf = lambda x: np.array([integrate.quad(lambda t: tier_service_distance_pdf(ts, 0, t), 0, v)[0]
                                  for v in np.atleast_1d(x)])
        assert ks_distance(emp, cdf, np.linspace(0, 2000, 60)) < 0.01
        s = np.sort(sample_tier_service_distance(ts, 0, rng, 50_000))
        emp2 = lambda x: np.searchsorted(s, x, side="right") / s.size
        assert ks_distance(emp2, cdf, np.linspace(0, 2000, 60)) < 0.01
