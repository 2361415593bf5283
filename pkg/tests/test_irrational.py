from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from smoothdio.errors import HypothesisViolated, NotIrrational, PrecisionExhausted
from smoothdio.irrational import (
    IrrationalSpec,
    convergent_error,
    convergents,
    distance_to_integer,
    format_phase,
    parse_phase,
    parse_theta,
)

SQRT2_60 = "1.41421356237309504880168872420969807856967187537694807317667973799"


def pairs(convs):
    return [(c.a, c.q) for c in convs]


def test_sqrt2_up_to_100():
    convs = convergents(parse_theta("sqrt:2"), 100)
    assert [str(c) for c in convs] == ["1/1", "3/2", "7/5", "17/12", "41/29", "99/70"]


@given(st.integers(min_value=1, max_value=10**30))
@settings(max_examples=40, deadline=None)
def test_sqrt2_matches_pell_recurrence(q_max):
    assert pairs(convergents(IrrationalSpec.sqrt(2), q_max)) == oracles.pell_sqrt2(q_max)


def test_golden_is_fibonacci():
    got = pairs(convergents(parse_theta("phi-golden"), 10**6))
    # a/q = F(k+1)/F(k)
    assert got[:5] == [(1, 1), (2, 1), (3, 2), (5, 3), (8, 5)]
    for (a, q), (a2, q2) in zip(got[1:], got[2:]):
        assert (a2, q2) == (a + q, a)


def test_e_head():
    got = [str(c) for c in convergents(IrrationalSpec.e(), 1000)]
    assert got[:8] == ["2/1", "3/1", "8/3", "11/4", "19/7", "87/32", "106/39", "193/71"]


def test_surd_golden_agrees():
    surd = parse_theta("surd:1,1,5,2")
    assert pairs(convergents(surd, 10**9)) == pairs(convergents(IrrationalSpec.golden(), 10**9))


@pytest.mark.parametrize("text", ["sqrt:2", "sqrt:3", "sqrt:7", "surd:-3,2,11,5", "e", "phi-golden"])
def test_convergent_quality(text):
    theta = parse_theta(text)
    for c in convergents(theta, 10**40):
        err = convergent_error(theta, c)
        assert err.hi < Fraction(1, c.q * c.q)


def test_decimal_literal_matches_surd_until_precision_runs_out():
    dec = parse_theta(f"dec:{SQRT2_60}@60")
    assert pairs(convergents(dec, 10**25)) == oracles.pell_sqrt2(10**25)
    with pytest.raises(PrecisionExhausted):
        convergents(dec, 10**40)


@given(st.integers(min_value=1, max_value=10**15))
@settings(max_examples=60, deadline=None)
def test_distance_matches_high_precision(n):
    d = distance_to_integer(IrrationalSpec.sqrt(2), Fraction(0), n)
    assert d.lo <= d.hi
    assert float(d.value) == pytest.approx(oracles.dist_sqrt2(n), rel=1e-12, abs=1e-300)


def test_known_distances():
    assert float(distance_to_integer(IrrationalSpec.sqrt(2), Fraction(0), 5741).value) == pytest.approx(
        6.158393867517049e-05, rel=1e-13
    )
    assert float(distance_to_integer(IrrationalSpec.sqrt(2), Fraction(0), 2).value) == pytest.approx(
        3 - 2 * 2**0.5, rel=1e-12
    )


def test_distance_with_phase():
    half = Fraction(1, 2)
    d = distance_to_integer(parse_theta("e"), half, 7)
    with mpmath.workdps(50):
        t = mpmath.e * 7 + mpmath.mpf(1) / 2
        ref = float(min(t - mpmath.floor(t), mpmath.ceil(t) - t))
    assert float(d.value) == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("bad", ["sqrt:4", "sqrt:0", "surd:1,0,5,2", "sqrt:-3"])
def test_rational_inputs_rejected(bad):
    with pytest.raises(NotIrrational):
        parse_theta(bad)


@pytest.mark.parametrize("bad", ["pi", "sqrt:x", "dec:1.4142@5", "surd:1,2", "dec:1.41@60"])
def test_malformed_rejected(bad):
    with pytest.raises(HypothesisViolated):
        parse_theta(bad)


def test_phase_round_trip():
    assert parse_phase("rat:3/6") == Fraction(1, 2)
    assert format_phase(Fraction(1, 2)) == "rat:1/2"
    assert parse_phase("rat:0") == 0
    with pytest.raises(HypothesisViolated):
        parse_phase("rat:1/0")
    assert str(parse_theta("surd:1,1,5,2")) == "surd:1,1,5,2"
