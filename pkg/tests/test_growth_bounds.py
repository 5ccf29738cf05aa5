import math

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from ldpc_floor.de_engine import ChannelCondition, EnsembleSpec, de_step, de_trajectory, decoding_threshold
from ldpc_floor.errors import BoundNotApplicableError, ConvergenceError, DomainError, ValidationError
from ldpc_floor.gauss_phi import phi
from ldpc_floor.growth_bounds import (
    GrowthQuery,
    growth_lower_bound_step,
    lemma1_unique_y,
    lemma2_lower_bound,
    required_mean_for_growth,
    snr_llr_threshold_curve,
    snr_threshold_breakout,
)

# bisection on y + 2 ln(1 + y/10) = -3 (tests/oracles/compute_oracles.py)
LEMMA1_X10_B2_AM3 = -2.4404524856214547


def _bisect_m(x, alpha, beta):
    """Solve m + beta ln m = x + beta ln x + alpha by bisection on m > 0."""
    target = x + beta * math.log(x) + alpha
    lo, hi = 1e-300, max(2 * x, x + abs(alpha)) + 1.0
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if mid + beta * math.log(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class TestLemmas:
    def test_lemma1_examples(self):
        assert lemma1_unique_y(0.0, 3.0, 2.0) == 0.0
        assert lemma1_unique_y(1 + 2 * math.log(2), 1.0, 2.0) == pytest.approx(1.0, abs=1e-10)
        y = lemma1_unique_y(-3.0, 10.0, 2.0)
        assert -10 < y < 0
        assert y == pytest.approx(LEMMA1_X10_B2_AM3, abs=1e-10)

    def test_lemma1_domain(self):
        with pytest.raises(DomainError):
            lemma1_unique_y(1.0, 0.0, 2.0)
        with pytest.raises(DomainError):
            lemma1_unique_y(1.0, 1.0, -2.0)

    def test_lemma2_examples(self):
        assert lemma2_lower_bound(7.0, 0.0, 3.0) == 7.0
        assert lemma2_lower_bound(10.0, 5.0, 2.0) == pytest.approx(10 + 5 / 1.2, abs=1e-9)

    @settings(max_examples=300, deadline=None)
    @given(st.floats(0.1, 100.0), st.floats(-50.0, 50.0), st.floats(0.1, 100.0))
    def test_lemma2_below_lemma1(self, x, alpha, beta):
        y = lemma1_unique_y(alpha, x, beta)
        # y > -x mathematically; very negative alpha puts y within rounding of -x
        assert y >= -x
        assert lemma2_lower_bound(x, alpha, beta) <= x + y + 1e-9 * max(1.0, x)

    @settings(max_examples=10_000, deadline=None)
    @given(st.floats(0.1, 100.0), st.floats(-50.0, 50.0), st.floats(0.1, 100.0))
    def test_lemma2_soundness(self, x, alpha, beta):
        assume(abs(alpha) > 1e-6)
        m = _bisect_m(x, alpha, beta)
        assert m > lemma2_lower_bound(x, alpha, beta) - 1e-12 * max(1.0, m)


class TestGrowthStep:
    def test_below_de_step(self, ens36, ch28):
        assert growth_lower_bound_step(20.0, ens36, ch28) <= de_step(20.0, ens36, ch28)

    def test_asymptotic_form(self, ens36, ch28):
        m = 1e6
        bound = growth_lower_bound_step(m, ens36, ch28, delta=1.0)
        assert bound - (2 * m + ch28.m_lambda - 4 * math.log(5)) == pytest.approx(0.0, abs=1e-4)

    def test_single_term_mixture(self, ch28):
        reg = EnsembleSpec.regular(3, 6)
        mix = EnsembleSpec(3, ((6, 1.0),))
        for m in (5.0, 20.0, 300.0):
            assert growth_lower_bound_step(m, mix, ch28) == pytest.approx(growth_lower_bound_step(m, reg, ch28), rel=1e-12)

    def test_not_applicable_at_small_llr(self, ens36, ch28):
        with pytest.raises(BoundNotApplicableError):
            growth_lower_bound_step(0.01, ens36, ChannelCondition(-5.0, 0.5))

    def test_irregular_bound_sound(self, ch28):
        ens = EnsembleSpec(3, ((5, 0.4), (7, 0.6)))
        ch = ChannelCondition(3.0, ens.rate)
        for m in (5.0, 20.0, 100.0):
            assert growth_lower_bound_step(m, ens, ch) <= de_step(m, ens, ch)

    @pytest.mark.parametrize("degrees", [(3, 6), (4, 8)])
    @pytest.mark.parametrize("db", [2, 3, 4, 5, 6])
    @pytest.mark.parametrize("m_prev", [5, 10, 20, 50, 100, 500])
    def test_bound_chain_grid(self, degrees, db, m_prev):
        ens = EnsembleSpec.regular(*degrees)
        ch = ChannelCondition(db, ens.rate)
        x = ch.m_lambda + (ens.d_v - 1) * m_prev
        if (ens.d_c - 1) * phi(x) >= 1:
            pytest.skip("truncated-binomial precondition fails")
        assert growth_lower_bound_step(m_prev, ens, ch) <= de_step(m_prev, ens, ch)

    @settings(max_examples=150, deadline=None)
    @given(st.floats(2.0, 6.0), st.floats(5.0, 500.0), st.sampled_from([(3, 6), (4, 8)]))
    def test_bound_chain_property(self, db, m_prev, degrees):
        ens = EnsembleSpec.regular(*degrees)
        ch = ChannelCondition(db, ens.rate)
        try:
            bound = growth_lower_bound_step(m_prev, ens, ch)
        except BoundNotApplicableError:
            return
        assert bound <= de_step(m_prev, ens, ch)


class TestBreakout:
    def test_regular_36(self, ens36):
        assert snr_threshold_breakout(ens36, 1.0) == pytest.approx(5.077, abs=1e-3)
        assert snr_threshold_breakout(ens36, 1.0) == pytest.approx(10 * math.log10(math.log(5) / 0.5), rel=1e-14)

    def test_regular_34(self):
        assert snr_threshold_breakout(EnsembleSpec.regular(3, 4)) == pytest.approx(10 * math.log10(math.log(3) / 0.25))

    @pytest.mark.parametrize("degrees", [(3, 6), (3, 4), (4, 8), (5, 10)])
    def test_smaller_delta_raises_threshold(self, degrees):
        ens = EnsembleSpec.regular(*degrees)
        assert snr_threshold_breakout(ens, 0.9) > snr_threshold_breakout(ens, 1.0)

    def test_irregular_formula(self):
        ens = EnsembleSpec(3, ((5, 0.4), (7, 0.6)))
        level = 0.4 * math.log(4) + 0.6 * math.log(6)
        assert snr_threshold_breakout(ens) == pytest.approx(10 * math.log10(level / ens.rate))

    def test_delta_domain(self, ens36):
        with pytest.raises(DomainError):
            snr_threshold_breakout(ens36, 0.0)


class TestCurves:
    def test_query_validation(self, ens36):
        with pytest.raises(ValidationError):
            GrowthQuery(ens36, 2.0)
        assert GrowthQuery(ens36, 1.5).epsilon == pytest.approx(0.5)

    def test_anchor_point(self, ens36):
        q = GrowthQuery(ens36, 1.696)
        assert required_mean_for_growth(q, 2.8) == pytest.approx(9.3, abs=0.3)
        (pt,) = snr_llr_threshold_curve(q, [9.3])
        assert pt.status == "ok" and pt.in_bound_regime
        assert pt.ebn0_db == pytest.approx(2.8, abs=0.05)

    def test_curves_ordered_by_r(self, ens36):
        grid = [1, 2, 4, 6, 8, 10, 12, 14]
        lo = snr_llr_threshold_curve(GrowthQuery(ens36, 1.696), grid)
        hi = snr_llr_threshold_curve(GrowthQuery(ens36, 1.761), grid)
        for a, b in zip(lo, hi):
            assert b.ebn0_db > a.ebn0_db

    def test_required_mean_ordered_by_r(self, ens36):
        a = required_mean_for_growth(GrowthQuery(ens36, 1.696), 2.8)
        b = required_mean_for_growth(GrowthQuery(ens36, 1.761), 2.8)
        assert b > a

    def test_zero_epsilon_limit_reaches_breakout(self, ens36):
        q = GrowthQuery(ens36, 2.0 - 1e-12)
        pts = snr_llr_threshold_curve(q, [1e3, 1e4, 1e5])
        levels = [p.ebn0_db for p in pts]
        assert all(abs(v - snr_threshold_breakout(ens36)) < 0.01 for v in levels)
        assert abs(levels[-1] - levels[-2]) < 1e-3

    def test_above_breakout_needs_no_mean(self, ens36):
        for r in (0.5, 1.696, 1.99):
            assert required_mean_for_growth(GrowthQuery(ens36, r), 5.2, delta=1.0) == 0.0

    def test_small_llr_points_flagged(self, ens36):
        (pt,) = snr_llr_threshold_curve(GrowthQuery(ens36, 1.696), [0.05], delta=1.0)
        x = ChannelCondition(pt.ebn0_db, 0.5).m_lambda + 2 * 0.05
        assert pt.status == "ok" and x < 8 and not pt.in_bound_regime

    def test_below_bracket_reported(self, ens36):
        (pt,) = snr_llr_threshold_curve(GrowthQuery(ens36, 1.696), [100.0])
        assert pt.ebn0_db is None and pt.status == "below_bracket"

    def test_unreachable_reported(self, ens36):
        with pytest.raises(ConvergenceError):
            required_mean_for_growth(GrowthQuery(ens36, 1.99), -20.0, m_max=50.0)


class TestRealization:
    @settings(max_examples=15, deadline=None)
    @given(st.floats(0.1, 3.0))
    def test_growth_at_least_dv_minus_1_above_breakout(self, excess):
        ens = EnsembleSpec.regular(3, 6)
        db = snr_threshold_breakout(ens) + excess
        m = de_trajectory(ens, ChannelCondition(db, 0.5), 200).means
        ratios = [b / a for a, b in zip(m, m[1:])]
        first = next(i for i, r in enumerate(ratios) if r >= 2.0)
        assert all(r >= 2.0 for r in ratios[first:])

    @settings(max_examples=15, deadline=None)
    @given(st.floats(0.0, 1.99), st.floats(0.0, 2.0))
    def test_growth_at_least_r_above_curve(self, r, excess):
        ens = EnsembleSpec.regular(3, 6)
        db = decoding_threshold(ens).ebn0_db + 0.2 + excess
        m = de_trajectory(ens, ChannelCondition(db, 0.5), 2000).means
        ratios = [b / a for a, b in zip(m, m[1:])]
        assert ratios[-1] >= r
        last_bad = max((i for i, q in enumerate(ratios) if q < r), default=-1)
        assert all(q >= r for q in ratios[last_bad + 1 :])
        assert last_bad < len(ratios) - 1
