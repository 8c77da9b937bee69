import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from sgcell.geometry import NetworkConfig
from sgcell.interference import (Constellation, SignalingMode, cf_aggregate, cumulant,
                                 mean_power, moment_from_cumulants)
from sgcell.metrics import ModulationScheme, asep_awgn, ber_outage_threshold, sinr_cdf
from sgcell.numerics import kummer_deficit
from sgcell.transforms import (LaplaceTransform, lt_baseline, lt_frequency_reuse, lt_load_aware,
                               lt_nakagami, lt_random_distance)

GRID = np.logspace(-3, 3, 50)
lam_s = st.floats(1e-7, 1e-4)
r0_s = st.floats(20.0, 2000.0)
eta_s = st.floats(2.1, 6.0)
fast = settings(max_examples=60, deadline=None)
slow = settings(max_examples=8, deadline=None)


def pytest_approx(v):
    return pytest.approx(v, rel=1e-8, abs=1e-300)


def _nonincreasing(v):
    return np.all(np.diff(v) <= 1e-12)


@fast
@given(lam_s, r0_s, eta_s, st.floats(0.1, 100.0))
def test_baseline_axioms(lam, r0, eta, P):
    z = GRID * r0 ** eta / P
    v = lt_baseline(z, lam, P, eta, r0)
    assert lt_baseline(0.0, lam, P, eta, r0) == 1.0
    # deep in the tail the value underflows to 0.0
    assert np.all((v >= 0) & (v <= 1)) and _nonincreasing(v)


@fast
@given(st.floats(0.0, 1.0))
def test_load_aware_axioms(p):
    v = lt_load_aware(GRID, p)
    assert lt_load_aware(0.0, p) == 1.0 and _nonincreasing(v)
    assert np.all(v >= lt_random_distance(GRID) - 1e-15)


@fast
@given(lam_s, r0_s, st.integers(1, 6), st.floats(2.5, 5.0))
def test_nakagami_axioms(lam, r0, m, eta):
    v = lt_nakagami(GRID, lam, r0, r0, m, eta)
    assert lt_nakagami(0.0, lam, r0, r0, m, eta) == 1.0
    assert np.all((v >= 0) & (v <= 1)) and _nonincreasing(v)


@slow
@given(st.integers(1, 6), st.floats(0.01, 50.0))
def test_reuse_bounds(delta, a):
    v = lt_frequency_reuse(a, 1e-6, delta)
    assert lt_random_distance(a) - 1e-12 <= v <= 1.0


@fast
@given(st.sampled_from([4, 16, 64, 256]), st.floats(0.0, 1e4))
def test_asep_awgn_range(M, snr):
    p = asep_awgn(snr, ModulationScheme.mqam(M))
    assert -1e-15 <= p <= (M - 1) / M + 1e-15


@fast
@given(st.sampled_from(["BPSK", "BFSK", "16-QAM", "8-PAM", "8-PSK-UB", "MSK"]), st.floats(1e-12, 1.0))
def test_threshold_round_trip(name, frac):
    s = ModulationScheme.from_name(name)
    eps = frac * s.w1
    T = ber_outage_threshold(eps, s)
    assert T >= 0
    assert s.w1 * special.erfc(math.sqrt(s.beta1 * T)) == pytest_approx(eps)


@fast
@given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
def test_outage_monotone_in_threshold(t1, t2):
    lo, hi = sorted((t1, t2))
    lt = LaplaceTransform.random_distance()
    assert 0 <= sinr_cdf(lo, lt) <= sinr_cdf(hi, lt) + 1e-15 <= 1 + 1e-15


@fast
@given(st.floats(0.1, 0.9), st.floats(1e-9, 1e4), st.floats(1e-9, 1e4))
def test_kummer_deficit_monotone(d, x1, x2):
    lo, hi = sorted((x1, x2))
    # 1 - 1F1(-d; 1-d; -x) is nonpositive and decreasing in x
    assert 0 >= kummer_deficit(d, lo) >= kummer_deficit(d, hi) * (1 + 1e-12)


@fast
@given(lam_s, r0_s, st.sampled_from([4, 16, 64]), st.floats(0.0, 8.0))
def test_cf_range(lam, r0, M, k):
    cfg = NetworkConfig(lam, 10.0, 4.0)
    w = k / math.sqrt(mean_power(cfg, r0) / 2)
    v = cf_aggregate(w, cfg, SignalingMode.exact(Constellation.qam(M)), r0)
    g = cf_aggregate(w, cfg, SignalingMode.gaussian(), r0)
    assert 0 < v <= 1 and 0 < g <= 1


@fast
@given(st.floats(1e-3, 1e3), st.integers(1, 5))
def test_gaussian_moments(var, half):
    n = 2 * half
    ks = [0.0, var] + [0.0] * (n - 2)
    dfact = math.prod(range(n - 1, 0, -2))
    assert moment_from_cumulants(n, ks) == pytest_approx(dfact * var ** half)


@fast
@given(lam_s, r0_s, eta_s)
def test_cumulant_two_is_half_power(lam, r0, eta):
    cfg = NetworkConfig(lam, 10.0, eta)
    assert cumulant(2, cfg, SignalingMode.gaussian(), r0) == pytest_approx(mean_power(cfg, r0) / 2)
