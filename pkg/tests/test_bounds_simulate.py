import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import binom

import oracles
from teqkd.channel import ChannelParams, error_rate_closed_form
from teqkd.codes import BCH378_261, RS63_43, get_code
from teqkd.codes.bounds import (
    snr_at_error_rate,
    uncoded_bit_error,
    union_bound_bch,
    union_bound_rs,
    weighted_binomial_tail,
)
from teqkd.errors import DomainError
from teqkd.simulate import SimulationPoint, simulate_algebraic, simulate_ldpc


@settings(max_examples=60)
@given(st.integers(5, 200), st.data(), st.floats(1e-6, 0.6))
def test_weighted_tail_matches_exact_binomials(n, data, p):
    t = data.draw(st.integers(0, n - 1))
    ref = oracles.weighted_tail_direct(n, t, p)
    got = weighted_binomial_tail(n, t, p)
    assert got == pytest.approx(ref, rel=1e-9, abs=1e-300)


def test_weighted_tail_edges_and_tiny_values():
    assert weighted_binomial_tail(63, 63, 0.5) == 0.0
    assert weighted_binomial_tail(63, 10, 0.0) == 0.0
    assert weighted_binomial_tail(63, 10, 1.0) == 1.0
    # long codes, deep tails: sum (i/n) C(n,i) p^i q^(n-i) = p P(Bin(n-1, p) >= t)
    for t, p in [(100, 1e-3), (30, 1e-4)]:
        ref = p * binom.sf(t - 1, 9998, p)
        assert weighted_binomial_tail(9999, t, p) == pytest.approx(ref, rel=1e-9)
    assert weighted_binomial_tail(63, 10, 1e-9) > 0.0
    with pytest.raises(DomainError):
        weighted_binomial_tail(10, 2, 1.5)


def test_uncoded_bit_error():
    prm = ChannelParams.from_snr_db(8, 30.0)
    assert uncoded_bit_error(prm) == pytest.approx(error_rate_closed_form(prm) / 3)


def test_rs_bound_by_hand():
    prm = ChannelParams.from_snr_db(8, 30.0)
    pe = error_rate_closed_form(prm)
    p_sym = 1 - (1 - pe) ** 2
    p_rs = oracles.weighted_tail_direct(63, 10, p_sym)
    expect = (1 - (1 - p_rs) ** 0.5) / 3
    assert union_bound_rs(prm, RS63_43) == pytest.approx(expect, rel=1e-10)


def test_bch_bound_by_hand():
    prm = ChannelParams.from_snr_db(8, 30.0)
    pe = error_rate_closed_form(prm)
    expect = oracles.weighted_tail_direct(126, 13, pe, scale=378)
    assert union_bound_bch(prm, BCH378_261) == pytest.approx(expect, rel=1e-10)
    # with no two-bin slips the multinomial variant collapses to the same sum
    assert union_bound_bch(prm, BCH378_261, 2, two_slip_fraction=0.0) == pytest.approx(expect, rel=1e-10)
    # two-bin slips cost two bit errors each, so the bound can only grow
    assert union_bound_bch(prm, BCH378_261, 2, two_slip_fraction=0.1) > expect
    assert union_bound_bch(prm, BCH378_261, 2) == pytest.approx(expect, rel=1e-6)
    with pytest.raises(ValueError):
        union_bound_bch(prm, BCH378_261, 3)


def test_bounds_need_power_of_two():
    with pytest.raises(DomainError):
        union_bound_rs(ChannelParams(6, 0.01), RS63_43)
    with pytest.raises(DomainError):
        union_bound_bch(ChannelParams(16, 0.01), BCH378_261)  # 4 does not divide 378


def test_bounds_decrease_with_snr():
    vals = [union_bound_rs(ChannelParams.from_snr_db(8, g), RS63_43) for g in range(20, 80, 5)]
    assert np.all(np.diff(vals) < 0)


def test_snr_at_error_rate():
    f = lambda db: uncoded_bit_error(ChannelParams.from_snr_db(8, db))
    g = snr_at_error_rate(f, 1e-5)
    assert f(g) == pytest.approx(1e-5, rel=1e-6)
    with pytest.raises(DomainError):
        snr_at_error_rate(f, 1e-40, hi_db=100.0)


# ---------------------------------------------------------------- simulation


def test_simulation_point_stats():
    p = SimulationPoint(20.0, 100, 4, 40, 10000, 1)
    assert p.ber == 0.004 and p.block_error_rate == 0.04
    assert p.ber_std_err == pytest.approx(0.002)
    assert math.isnan(SimulationPoint(20.0, 0, 0, 0, 0, 0).ber)


def test_rs_simulation_near_bound():
    prm = ChannelParams.from_snr_db(8, 24.0)
    pt = simulate_algebraic(prm, RS63_43, np.random.default_rng(1), target_events=100)
    bound = union_bound_rs(prm, RS63_43)
    assert 0.5 < pt.ber / bound < 2.0
    assert pt.bits == pt.blocks * 378


def test_bch_simulation_runs_and_is_reproducible():
    prm = ChannelParams.from_snr_db(8, 22.0)
    a = simulate_algebraic(prm, BCH378_261, np.random.default_rng(3), target_events=30)
    b = simulate_algebraic(prm, BCH378_261, np.random.default_rng(3), target_events=30)
    assert a == b
    assert a.block_errors >= 30


def test_ldpc_simulation_soft_beats_hard():
    code = get_code("ldpc384")
    prm = ChannelParams.from_snr_db(8, 16.0)
    soft = simulate_ldpc(prm, code, "exact", np.random.default_rng(5), target_events=40, max_blocks=20000)
    hard = simulate_ldpc(prm, code, "hard", np.random.default_rng(5), target_events=40, max_blocks=20000)
    assert soft.ber < hard.ber
    assert hard.block_error_rate > 0.01


def test_simulation_rejects_bad_n():
    with pytest.raises(ValueError):
        simulate_algebraic(ChannelParams(16, 0.01), RS63_43, np.random.default_rng(0))
