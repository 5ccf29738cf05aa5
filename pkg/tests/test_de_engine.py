import math

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from ldpc_floor.de_engine import (
    ChannelCondition,
    EnsembleSpec,
    check_output_mean,
    de_step,
    de_trajectory,
    decoding_threshold,
)
from ldpc_floor.errors import ValidationError

# oracle: trapezoid phi + bisection inverse (tests/oracles/compute_oracles.py)
M_LAMBDA_28 = 3.8109214359264945
DE_STEP0_28 = 0.6248404839372508


class TestEnsembleSpec:
    def test_regular_rate(self, ens36):
        assert ens36.rate == pytest.approx(0.5, abs=1e-15)
        assert ens36.d_c == 6 and ens36.d_r == 6 and ens36.is_regular

    def test_irregular_rate(self):
        ens = EnsembleSpec(3, ((5, 0.5), (7, 0.5)))
        assert ens.rate == pytest.approx(1 - 3 * (0.1 + 0.5 / 7))
        assert ens.d_r == 7
        with pytest.raises(ValidationError):
            ens.d_c

    def test_merges_duplicate_degrees(self):
        assert EnsembleSpec(3, ((6, 0.25), (6, 0.75))) == EnsembleSpec.regular(3, 6)

    @pytest.mark.parametrize(
        "dv,rho",
        [(2, ((6, 1.0),)), (3, ((6, 0.9),)), (3, ((1, 1.0),)), (3, ((6, 1.1), (4, -0.1))), (3, ())],
    )
    def test_invalid(self, dv, rho):
        with pytest.raises(ValidationError):
            EnsembleSpec(dv, rho)

    def test_parse(self):
        assert EnsembleSpec.parse("4:8") == EnsembleSpec.regular(4, 8)
        with pytest.raises(ValidationError):
            EnsembleSpec.parse("3-6")


def test_channel_condition(ch28):
    assert ch28.m_lambda == pytest.approx(M_LAMBDA_28, rel=1e-15)
    assert ch28.m_lambda == pytest.approx(2 / ch28.sigma_sq, rel=1e-15)
    with pytest.raises(ValidationError):
        ChannelCondition(1.0, 1.0)


def test_de_step_first_iteration(ens36, ch28):
    assert de_step(0.0, ens36, ch28) == pytest.approx(DE_STEP0_28, rel=1e-9)


def test_single_degree_mixture_equals_regular(ch28):
    reg = EnsembleSpec.regular(3, 6)
    mix = EnsembleSpec(3, ((6, 1.0),))
    for m in (0.0, 0.3, 2.0, 17.0, 400.0):
        assert de_step(m, mix, ch28) == pytest.approx(de_step(m, reg, ch28), rel=1e-12)


def test_large_mean_lower_bound(ens36, ch28):
    m = 200.0
    assert de_step(m, ens36, ch28) > 2 * m - 4 * math.log(5) + 0.9 * ch28.m_lambda


def test_irregular_is_weighted_sum(ch28):
    ens = EnsembleSpec(3, ((4, 0.3), (7, 0.7)))
    x = ch28.m_lambda + 2 * 5.0
    expected = 0.3 * check_output_mean(x, 4) + 0.7 * check_output_mean(x, 7)
    assert de_step(5.0, ens, ch28) == pytest.approx(expected, rel=1e-14)


def test_trajectory_eighth_iteration(ens36, ch28):
    traj = de_trajectory(ens36, ch28, 30)
    assert traj.first_iteration_above(9.3) == 8
    assert traj.means[6] > 9.3 >= traj.means[5]


def test_trajectory_single_step(ens36, ch28):
    traj = de_trajectory(ens36, ch28, 1)
    assert traj.means == [de_step(0.0, ens36, ch28)]
    assert traj.variances == [2 * traj.means[0]]


def test_trajectory_ceiling(ens36, ch28):
    traj = de_trajectory(ens36, ch28, 1000)
    assert traj.diverged
    assert traj.means[-1] > 1e6 and all(m <= 1e6 for m in traj.means[:-1])


def test_growth_above_breakout(ens36):
    m = de_trajectory(ens36, ChannelCondition(5.2, 0.5), 100).means
    for prev, nxt in zip(m, m[1:]):
        if prev >= 15:
            assert nxt / prev >= 2.0


def test_below_threshold_stalls(ens36):
    traj = de_trajectory(ens36, ChannelCondition(0.8, 0.5), 5000, stall_rtol=1e-13)
    assert not traj.diverged and traj.converged_to is not None


def test_decoding_threshold(ens36):
    fine = decoding_threshold(ens36, tol_db=0.01)
    assert fine.converged
    assert fine.ebn0_db == pytest.approx(1.16, abs=0.05)
    coarse = decoding_threshold(ens36, tol_db=0.5)
    assert abs(coarse.ebn0_db - fine.ebn0_db) <= 0.5
    t48 = decoding_threshold(EnsembleSpec.regular(4, 8), tol_db=0.01).ebn0_db
    assert -2 < t48 < fine.ebn0_db + 2


def test_decoding_threshold_rejects_bad_tol(ens36):
    with pytest.raises(ValidationError):
        decoding_threshold(ens36, tol_db=0)


@settings(max_examples=40, deadline=None)
@given(st.floats(1.5, 6.0), st.floats(0.01, 1.0), st.integers(1, 15))
def test_monotone_in_snr(s1, ds, l):
    ens = EnsembleSpec.regular(3, 6)
    a = de_trajectory(ens, ChannelCondition(s1, 0.5), l, ceiling=math.inf).means[-1]
    b = de_trajectory(ens, ChannelCondition(s1 + ds, 0.5), l, ceiling=math.inf).means[-1]
    assert b >= a


@settings(max_examples=20, deadline=None)
@given(st.floats(1.3, 6.0))
def test_monotone_in_iteration_above_threshold(s):
    m = de_trajectory(EnsembleSpec.regular(3, 6), ChannelCondition(s, 0.5), 200).means
    assert all(b > a for a, b in zip(m, m[1:]))


@settings(max_examples=60, deadline=None)
@given(st.floats(0.0, 8.0), st.floats(3.5, 500.0), st.sampled_from([(3, 6), (3, 4), (4, 8), (3, 12)]))
def test_eq8_lower_bound_consistency(db, m_prev, degrees):
    ens = EnsembleSpec.regular(*degrees)
    ch = ChannelCondition(db, ens.rate)
    x = ch.m_lambda + (ens.d_v - 1) * m_prev
    assume(x >= 10)
    out = de_step(m_prev, ens, ch)
    # delta = 1 - 3/out is only a valid correction factor for out > 3
    assume(out > 3)
    delta = 1 - 3 / out
    bound = x - 4 * math.log((ens.d_c - 1) / delta * (1 - 1 / (7 * x))) / (1 + 2 / x)
    assert out > bound
