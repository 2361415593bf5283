import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from smoothdio.errors import HypothesisViolated
from smoothdio.saddle import check_lemma2_bounds, check_scaling_law, saddle_sum, solve_alpha


def test_alpha_100_100():
    r = solve_alpha(100, 100)
    assert r.alpha == pytest.approx(0.9584256762772216, abs=1e-9)
    assert r.u_ht == pytest.approx(1.0)


@given(st.floats(1e2, 1e15), st.floats(2, 5000))
@settings(max_examples=40, deadline=None)
def test_alpha_matches_bisection_and_residual(x, y):
    if y > x:
        x, y = y, x
    r = solve_alpha(x, y)
    assert abs(r.residual) <= 1e-9 * math.log(x)
    assert abs(saddle_sum(r.alpha, y) - math.log(x)) <= 1e-9 * math.log(x) * 1.01
    assert r.alpha == pytest.approx(oracles.bisect_alpha(x, y), abs=1e-8)


def test_alpha_can_exceed_one_for_tiny_y():
    assert solve_alpha(3, 3).alpha > 1


def test_alpha_decreases_in_x():
    alphas = [solve_alpha(10**k, 50).alpha for k in range(2, 16)]
    assert all(a > b for a, b in zip(alphas, alphas[1:]))


def test_alpha_towards_one_minus_inverse_C():
    x = 1e12
    r = solve_alpha(x, math.log(x) ** 3)
    assert abs(r.alpha - 2 / 3) < 0.25


@pytest.mark.parametrize("x,y", [(1, 2), (10, 1.5), (5, 10)])
def test_bad_domain(x, y):
    with pytest.raises(HypothesisViolated):
        solve_alpha(x, y)


def test_scaling_gap_shrinks():
    near = check_scaling_law(1e6, 100, 2)
    far = check_scaling_law(1e4, 100, 2)
    assert near.relative_gap <= 0.15
    assert near.relative_gap < far.relative_gap
    assert near.psi_cx > near.psi_x


def test_lemma2_report_fields():
    rep = check_lemma2_bounds(1e4, 2, 0.5)
    d = rep.to_dict()
    assert d["psi"] == 3508
    assert rep.alpha_ok and rep.psi_lower_ok and rep.psi_upper_ok
    with pytest.raises(HypothesisViolated):
        check_lemma2_bounds(1e4, 1, 0.5)
