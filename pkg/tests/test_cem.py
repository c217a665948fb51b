import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from stepstress.cem import (
    Complete,
    HybridI,
    HybridII,
    ObservedData,
    StepStressParams,
    TypeI,
    TypeII,
    apply_censoring,
    cem_cdf,
    cem_pdf,
    cem_sample,
    termination_time,
)
from stepstress.errors import ValidationError
from stepstress.ge_dist import GEParams, RngStream, ge_cdf, ge_pdf, ge_sample

TABLE_PARAMS = StepStressParams(0.6, 0.1, 0.2, 9.0)

params_strategy = st.builds(
    lambda a, t2, b, tau: StepStressParams.from_beta(a, t2, b, tau),
    st.floats(0.2, 5.0),
    st.floats(0.05, 2.0),
    st.floats(0.02, 0.98),
    st.floats(0.5, 15.0),
)


class TestParams:
    def test_order_restriction(self):
        with pytest.raises(ValidationError):
            StepStressParams(1.0, 0.3, 0.2, 5.0)
        with pytest.raises(ValidationError):
            StepStressParams(1.0, 0.2, 0.2, 5.0)

    def test_from_beta(self):
        p = StepStressParams.from_beta(1.5, 0.2, 0.5, 7.0)
        assert p.theta1 == 0.1 and p.beta == 0.5


class TestCdf:
    def test_first_branch_value(self):
        p = StepStressParams(0.6, 0.1, 0.2, 5.0)
        assert cem_cdf(p, 3.0) == pytest.approx((1 - math.exp(-0.3)) ** 0.6, rel=1e-14)

    def test_second_branch_value_and_quadrature(self):
        p = StepStressParams(1.5, 0.1, 0.2, 5.0)
        expected = (1 - math.exp(-0.2 * 5.5)) ** 1.5
        assert cem_cdf(p, 8.0) == pytest.approx(expected, rel=1e-14)
        a, _ = integrate.quad(lambda t: cem_pdf(p, t), 0, 5.0, epsabs=1e-14, epsrel=1e-14)
        b, _ = integrate.quad(lambda t: cem_pdf(p, t), 5.0, 8.0, epsabs=1e-14, epsrel=1e-14)
        assert abs(a + b - expected) < 1e-8

    @given(params_strategy)
    @settings(max_examples=200, deadline=None)
    def test_continuity_at_tau1(self, p):
        left = cem_cdf(p, np.nextafter(p.tau1, 0))
        at = cem_cdf(p, p.tau1)
        right = cem_cdf(p, np.nextafter(p.tau1, np.inf))
        # the two branches share one closed form; the only slack is one ulp of t
        assert abs(right - left) <= 1e-12
        first = ge_cdf(GEParams(p.alpha, p.theta1), p.tau1)
        assert at == first

    @given(params_strategy, st.floats(0.0, 1.0))
    @settings(max_examples=200, deadline=None)
    def test_first_branch_identity(self, p, frac):
        t = frac * p.tau1
        assert cem_cdf(p, t) == ge_cdf(GEParams(p.alpha, p.theta1), t)

    def test_zero_before_origin(self):
        assert cem_cdf(TABLE_PARAMS, -1.0) == 0.0


class TestPdf:
    def test_normalization(self):
        p = TABLE_PARAMS
        pieces = [(0, 1e-6), (1e-6, p.tau1), (p.tau1, np.inf)]
        total = sum(integrate.quad(lambda t: cem_pdf(p, t), a, b, epsabs=1e-14, epsrel=1e-13, limit=400)[0]
                    for a, b in pieces)
        assert abs(total - 1.0) < 1e-8

    @given(params_strategy)
    @settings(max_examples=30, deadline=None)
    def test_normalization_random(self, p):
        m = min(p.tau1, 1.0)
        pieces = [(0, m), (m, p.tau1), (p.tau1, np.inf)] if m < p.tau1 else [(0, p.tau1), (p.tau1, np.inf)]
        total = sum(integrate.quad(lambda t: cem_pdf(p, t), a, b, epsabs=1e-14, epsrel=1e-13, limit=400)[0]
                    for a, b in pieces)
        assert abs(total - 1.0) < 1e-8

    def test_first_branch_identity(self):
        p = TABLE_PARAMS
        t = np.linspace(0.01, p.tau1, 50)
        assert np.array_equal(cem_pdf(p, t), ge_pdf(GEParams(p.alpha, p.theta1), t))

    @pytest.mark.parametrize("t", [1.0, 9.0 - 1e-3, 9.0 + 1e-3, 18.0])
    def test_derivative_of_cdf(self, t):
        p, h = TABLE_PARAMS, 1e-6
        fd = (cem_cdf(p, t + h) - cem_cdf(p, t - h)) / (2 * h)
        assert cem_pdf(p, t) == pytest.approx(fd, rel=1e-6)


class TestSample:
    def test_ks_against_cdf(self):
        p = StepStressParams(1.5, 0.1, 0.2, 7.0)
        x = cem_sample(p, 10**5, RngStream(31))
        d = stats.kstest(x, lambda t: cem_cdf(p, t)).statistic
        assert d < 1.63 / math.sqrt(10**5)

    def test_degenerate_limit(self):
        eps = 1e-6
        p = StepStressParams(1.2, 0.5 - eps, 0.5, 3.0)
        x = cem_sample(p, 10**5, RngStream(32))
        y = ge_sample(GEParams(1.2, 0.5), RngStream(33), 10**5)
        assert stats.ks_2samp(x, y).statistic < 0.01

    def test_sorted_and_deterministic(self):
        a = cem_sample(TABLE_PARAMS, 50, RngStream(1, 4))
        assert np.all(np.diff(a) > 0)
        assert np.array_equal(a, cem_sample(TABLE_PARAMS, 50, RngStream(1, 4)))

    def test_rejects_empty(self):
        with pytest.raises(ValidationError):
            cem_sample(TABLE_PARAMS, 0, RngStream(0))


def _random_full(seed, n=20):
    return cem_sample(StepStressParams(1.5, 0.1, 0.2, 5.0), n, RngStream(seed))


class TestCensoring:
    def test_complete(self):
        full = _random_full(0)
        d = apply_censoring(full, 20, 5.0, Complete())
        assert d.n_star == 20 and d.tau_star == full[-1] and d.n_censored == 0

    def test_type1_never_observes_past_tau2(self):
        for seed in range(50):
            d = apply_censoring(_random_full(seed), 20, 5.0, TypeI(8.0))
            assert d.times.size == 0 or d.times[-1] <= 8.0
            assert d.tau_star == 8.0

    def test_type2_stops_at_rth(self):
        full = _random_full(1)
        d = apply_censoring(full, 20, 5.0, TypeII(12))
        assert d.n_star == 12 and d.tau_star == full[11]

    def test_hybrid1_case_c(self):
        full = np.array([0.5, 1.0, 1.5, 2.0, 6.0, 9.0])
        d = apply_censoring(full, 6, 5.0, HybridI(3, 10.0))
        assert (d.n1_star, d.n2_star, d.tau_star) == (3, 0, 1.5)

    @given(st.integers(0, 10**6), st.integers(1, 20), st.floats(0.5, 20.0))
    @settings(max_examples=200, deadline=None)
    def test_hybrid_identities(self, seed, r, tau2):
        full = _random_full(seed)
        t1 = termination_time(full, 20, TypeI(tau2))
        t2 = termination_time(full, 20, TypeII(r))
        assert termination_time(full, 20, HybridI(r, tau2)) == min(t1, t2)
        assert termination_time(full, 20, HybridII(r, tau2)) == max(t1, t2)
        assert apply_censoring(full, 20, 5.0, HybridII(r, tau2)).n_star >= r

    @given(st.integers(0, 10**6), st.sampled_from(["type1", "type2", "hybrid1", "hybrid2"]))
    @settings(max_examples=100, deadline=None)
    def test_idempotent(self, seed, scheme):
        spec = {"type1": TypeI(9.0), "type2": TypeII(14), "hybrid1": HybridI(14, 9.0),
                "hybrid2": HybridII(14, 9.0)}[scheme]
        once = apply_censoring(_random_full(seed), 20, 5.0, spec)
        twice = apply_censoring(once.times, 20, 5.0, spec)
        assert np.array_equal(once.times, twice.times)
        assert (once.n1_star, once.tau_star) == (twice.n1_star, twice.tau_star)

    def test_stage_split(self):
        d = apply_censoring(_random_full(2), 20, 5.0, Complete())
        assert np.all(d.stage1 <= 5.0) and np.all(d.stage2 > 5.0)
        assert d.stage1.size == d.n1_star

    def test_time_equal_to_tau1_is_stage1(self):
        d = ObservedData.complete([1.0, 5.0, 7.0], 5.0)
        assert d.n1_star == 2

    def test_validation(self):
        with pytest.raises(ValidationError):
            apply_censoring(np.arange(1.0, 5.0), 3, 2.0, Complete())
        with pytest.raises(ValidationError):
            apply_censoring(np.arange(1.0, 5.0), 4, 2.0, TypeII(5))
        with pytest.raises(ValidationError):
            ObservedData(np.array([2.0, 1.0]), 2, 1, 1, 2.0, 1.5)

    def test_degenerate(self):
        d = apply_censoring(np.array([5.0, 6.0]), 2, 1.0, TypeI(0.5))
        assert d.degenerate
