import dataclasses
import math
from fractions import Fraction

import mpmath
import pytest

import oracles
from smoothdio.construct import (
    count_solutions,
    diagnostics,
    gamma_for,
    make_plan,
    plan_distance,
    plan_windows,
    record_scan,
    residue_table,
    search_solutions,
    theorem_exponent,
)
from smoothdio.errors import BudgetExceeded, GammaNonpositive, HypothesisViolated
from smoothdio.irrational import IrrationalSpec, distance_to_integer, parse_theta

SQRT2 = IrrationalSpec.sqrt(2)


@pytest.fixture(scope="module")
def small_plan():
    return make_plan(SQRT2, Fraction(0), 3, 0.05, 1000)


def test_gamma_and_exponent():
    assert gamma_for(3, 0.05) == pytest.approx(1 / 3 - 2 / 9 - 0.25 / 6)
    assert theorem_exponent(3) == Fraction(1, 9)
    with pytest.raises(GammaNonpositive):
        make_plan(SQRT2, Fraction(0), 3, 0.3, 10**4)


def test_plan_geometry(small_plan):
    p = small_plan
    assert (p.a, p.q) == (3363, 2378)
    assert p.x ** ((1 + p.gamma) / 2) == pytest.approx(p.q, rel=1e-9)
    assert p.y == pytest.approx(math.log(p.x) ** 3)
    assert p.J_start == pytest.approx(p.x / p.q)
    assert p.threshold > 0
    d = p.to_dict()
    assert d["theta"] == "sqrt:2" and d["q"] == 2378 and d["S_range"] == [2378, 2]


def test_q_min_picks_first_large_denominator():
    assert make_plan(SQRT2, Fraction(0), 3, 0.05, 10**4).q == 13860
    assert make_plan(SQRT2, Fraction(0), 3, 0.05, 13860).q == 13860


def test_windows_match_trial_division(small_plan):
    S, J = plan_windows(small_plan)
    assert S.tolist() == oracles.brute_window(small_plan.q, 2, small_plan.y)
    assert J.tolist() == oracles.brute_window(small_plan.J_start, 2, small_plan.y)


def test_residue_table_exact():
    t = residue_table(7, Fraction(1, 3), 0.2)
    for s in range(7):
        frac = Fraction(s, 7) + Fraction(1, 3)
        d = abs(frac - round(frac))
        assert t.distance(s) == d
        assert bool(t.ok[s]) == (d <= Fraction(0.2))


def test_search_matches_exhaustive_scan(small_plan):
    p = small_plan
    S, J = plan_windows(p)
    count, best = oracles.exhaustive_sqrt2_scan(S.tolist(), J.tolist(), p.a, p.q, p.threshold, 8)
    assert count_solutions(p, (S, J)) == count
    recs = search_solutions(p, 8)
    assert [(r.n, r.u, r.v) for r in recs] == [(n, u, v) for _, n, u, v in best]
    for r, (d, *_rest) in zip(recs, best):
        assert float(r.dist_true.value) == pytest.approx(d, rel=1e-12)
        assert r.certificate.passed and r.certificate.margin > 0
        assert r.dist_rational == plan_distance(p, r.n)


def test_search_threads_identical(small_plan):
    one = [r.to_dict() for r in search_solutions(small_plan, 20)]
    four = [r.to_dict() for r in search_solutions(small_plan, 20, workers=4)]
    assert one == four


def test_search_with_rational_phase():
    p = make_plan(SQRT2, Fraction(1, 3), 3, 0.05, 1000)
    recs = search_solutions(p, 4)
    assert recs
    for r in recs:
        assert r.certificate.passed
        d = distance_to_integer(SQRT2, Fraction(1, 3), r.n)
        assert d.value == r.dist_true.value


def test_search_budget(small_plan):
    with pytest.raises(BudgetExceeded):
        search_solutions(small_plan, 1, work_budget=100)
    with pytest.raises(HypothesisViolated):
        search_solutions(small_plan, 0)


def test_diagnostics(small_plan):
    d = diagnostics(small_plan)
    assert d["size_S"] <= d["S_window_length"]
    assert d["bilinear_identity_gap"] <= 1e-8 * d["sum_abs_S_h"]
    assert d["solutions"] > 0
    assert d["dyadic_max_block_ratio"] < 1


def scan_oracle(n_max: int, C: float):
    table = oracles.lpf_table(n_max)
    best = math.inf
    out = []
    for n in range(2, n_max + 1):
        if table[n] > math.log(n) ** C:
            continue
        with mpmath.workdps(40):
            score = oracles.dist_sqrt2(n) * mpmath.mpf(n) ** (mpmath.mpf(1) / 9)
        if score < best:
            best = score
            out.append(n)
    return out


def test_record_scan_matches_oracle():
    got = record_scan(SQRT2, Fraction(0), 3, 5000)
    assert [r.n for r in got] == scan_oracle(5000, 3)
    scores = [r.score for r in got]
    assert all(a > b for a, b in zip(scores, scores[1:]))


def test_record_scan_edges():
    assert record_scan(SQRT2, Fraction(0), 3, 3) == []
    assert record_scan(SQRT2, Fraction(0), 3, 4)[0].n == 4
    with pytest.raises(BudgetExceeded):
        record_scan(SQRT2, Fraction(0), 3, 10**6, work_budget=10)


def test_record_scan_other_theta():
    got = record_scan(parse_theta("e"), Fraction(1, 2), 3, 20000)
    assert got
    assert all(a.score > b.score for a, b in zip(got, got[1:]))


def test_planted_solution_found(small_plan):
    S, J = plan_windows(small_plan)
    u0, v0 = int(S.tolist()[17]), int(J.tolist()[5])
    p = small_plan
    phi = Fraction(-(p.a * u0 * v0) % p.q, p.q)
    planted = make_plan(SQRT2, phi, 3, 0.05, 1000)
    table = residue_table(planted.q, phi, planted.threshold)
    assert table.distance((planted.a * u0 * v0) % planted.q) == 0
    (rec,) = search_solutions(planted, 5, windows=([u0], [v0]))
    assert (rec.u, rec.v, rec.dist_rational) == (u0, v0, 0)
    assert count_solutions(planted, (S, J)) > count_solutions(planted, (S.tolist()[:17], J))


def test_vacuous_threshold_takes_every_pair():
    p = dataclasses.replace(make_plan(SQRT2, Fraction(0), 3, 0.05, 100), threshold=0.5)
    S, J = plan_windows(p)
    assert count_solutions(p, (S, J)) == len(S) * len(J)
    small = (S.tolist()[:20], J.tolist()[:10])
    assert len(search_solutions(p, 10**9, windows=small)) == 200
    assert len(search_solutions(p, 7, windows=small)) == 7


def test_degenerate_diagnostics(small_plan):
    p = dataclasses.replace(small_plan, H=1)
    d = diagnostics(p, windows=([1], [1]))
    assert d["sum_abs_S_h"] == pytest.approx(1.0)
    assert d["size_S"] == d["size_J"] == 1
