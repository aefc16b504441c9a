import itertools
import math
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from baitmenu.core import BAIT, EXPENSIVE, FiniteDistribution, Mechanism, MenuPage, validate
from baitmenu.evaluator import exact_revenue, page_outcome_distribution
from baitmenu.synthesis import (
    BaitPage,
    BaitSkeleton,
    UtilityBracket,
    attach_expensive,
    bait_price_candidates,
    bracket_probability,
    conditional_sale_ratio,
    median_thresholds,
    spreading_coefficient,
    staircase_candidates,
    synthesize,
    synthesize_bait_dp,
    synthesize_candidates,
    two_price_reduction,
)

UNIFORM_10 = FiniteDistribution(tuple(float(v) for v in range(1, 11)), (0.1,) * 10)


def brute_bracket_probability(prices, bracket, f):
    total = 0.0
    for combo in itertools.product(range(len(f.support)), repeat=len(prices)):
        u = max(round(f.support[i] - p, 9) for i, p in zip(combo, prices))
        if bracket.lower <= u <= bracket.upper:
            total += math.prod(f.probs[i] for i in combo)
    return total


# --- spreading -------------------------------------------------------------------


def test_spreading_example(f_example):
    assert spreading_coefficient(f_example, 1.0).eta == 1.0


def test_spreading_point_mass():
    assert spreading_coefficient(FiniteDistribution.point_mass(5), 2.0).eta == 1.0


def test_spreading_uniform():
    cert = spreading_coefficient(UNIFORM_10, 1.0)
    assert cert.eta == pytest.approx(0.5)
    assert cert.witness == 10.0


# --- bracket probability and the two-price reduction ------------------------------


def test_bracket_probability_matches_enumeration(f_example):
    for prices in ([9.0], [9.0, 98.9], [9.0, 9.0, 8.0], [0.0, 50.0]):
        for lo, hi in ((1, 1), (1, 2), (0, 91), (1.05, 1.2), (-5, 0.5)):
            b = UtilityBracket(lo, hi)
            assert bracket_probability(prices, b, f_example) == pytest.approx(
                brute_bracket_probability(prices, b, f_example), abs=1e-12)


def test_two_price_identity(f_example):
    b = UtilityBracket(1, 1)
    assert two_price_reduction([9, 9, 9], b, f_example) == (9.0, 9.0, 3)


def test_two_price_example(f_example):
    prices, b = [9.0, 98.9], UtilityBracket(1, 1)
    eps = 1 - bracket_probability(prices, b, f_example)
    assert eps == pytest.approx(0.19)
    p_lo, p_hi, c = two_price_reduction(prices, b, f_example)
    page = [p_lo] * c + [p_hi] * (len(prices) - c)
    assert bracket_probability(page, b, f_example) >= 1 - 2 * eps - 1e-12


def test_two_price_rejects_large_eps(f_example):
    with pytest.raises(ValueError):
        two_price_reduction([98.9, 50.0], UtilityBracket(1, 1), f_example)


@st.composite
def bracket_pages(draw):
    f = draw(st.sampled_from([
        FiniteDistribution((10.0, 100.0), (0.9, 0.1)),
        FiniteDistribution((1.0, 4.0, 9.0), (0.2, 0.5, 0.3)),
        FiniteDistribution((2.5, 3.0, 7.0, 20.0), (0.4, 0.1, 0.3, 0.2)),
    ]))
    n = draw(st.integers(2, 6))
    price = st.one_of(
        st.sampled_from([max(v - g, 0.0) for v in f.support for g in (0, 1, 2)]),
        st.floats(0, f.vmax, allow_nan=False).map(lambda x: round(x, 2)),
    )
    prices = draw(st.lists(price, min_size=n, max_size=n))
    dist = page_outcome_distribution(MenuPage(tuple(prices)), f)
    atoms = sorted({o.utility for o in dist})
    i = draw(st.integers(0, len(atoms) - 1))
    j = draw(st.integers(i, len(atoms) - 1))
    return f, prices, UtilityBracket(atoms[i], atoms[j])


@settings(max_examples=300, deadline=None)
@given(bracket_pages())
def test_two_price_postcondition(case):
    f, prices, b = case
    eps = 1 - bracket_probability(prices, b, f)
    if eps >= 0.5:
        return
    p_lo, p_hi, c = two_price_reduction(prices, b, f)
    page = [p_lo] * c + [p_hi] * (len(prices) - c)
    assert p_lo <= p_hi
    assert 1 <= c <= len(prices)
    assert bracket_probability(page, b, f) >= 1 - 2 * eps - 1e-12


@given(st.lists(st.floats(0, 0.5), min_size=1, max_size=20))
def test_eps_to_2eps(eps):
    e = np.asarray(eps)
    assert np.prod(1 - 2 * e) >= 2 * np.prod(1 - e) - 1 - 1e-12


# --- medians ----------------------------------------------------------------------


def test_median_point_masses():
    laws = [((float(i),), (1.0,)) for i in range(1, 5)]
    assert median_thresholds(laws) == [0.0, 1.0, 2.0, 3.0, 4.0, math.inf]


def test_median_lower_pick():
    alphas = median_thresholds([((0.0, 2.0), (0.5, 0.5))])
    assert alphas[1] == 0.0


def test_median_clamped_nondecreasing():
    alphas = median_thresholds([FiniteDistribution.point_mass(5), FiniteDistribution.point_mass(2)])
    assert alphas == [0.0, 5.0, 5.0, math.inf]


def test_utility_control_three_variables():
    # x1 <= x2 <= x3 with x1 >= 0 fails only with small probability
    laws = [((0.0, 1.0), (0.9, 0.1)), ((1.0, 3.0), (0.8, 0.2)), ((3.0, 5.0), (0.7, 0.3))]
    alphas = median_thresholds(laws)
    mono = odd = even = 0.0
    for combo in itertools.product(range(2), repeat=3):
        x = [laws[i][0][c] for i, c in enumerate(combo)]
        q = math.prod(laws[i][1][c] for i, c in enumerate(combo))
        if x[0] >= 0 and x[0] <= x[1] <= x[2]:
            mono += q
        if alphas[0] <= x[0] <= alphas[2] and alphas[2] <= x[2] <= alphas[4]:
            odd += q
        if alphas[1] <= x[1] <= alphas[3]:
            even += q
    eps = 1 - mono
    assert eps < 0.5
    assert odd >= 1 - 2 * eps
    assert even >= 1 - 2 * eps


# --- the dynamic program ----------------------------------------------------------


def test_dp_worked_example(f_example):
    skels = synthesize_bait_dp(f_example, 2, 1.0, grid_step=1.0)
    assert [s.n_pages for s in skels] == list(range(1, 11))
    ten = skels[-1]
    assert [p.prices for p in ten.pages] == [(float(9 - t),) for t in range(10)]
    assert ten.free_slots == 10
    # pages 1..9 land on utility t w.p. 0.9; the zero-price page always lands in [10, 100]
    assert ten.success_prob == pytest.approx(0.9 ** 9)
    assert ten.success_prob >= 1 / 3
    for page in ten.pages:
        assert page.prob == pytest.approx(bracket_probability(page.prices, page.bracket, f_example))


def test_dp_brackets_chain(f_example):
    for skel in synthesize_bait_dp(f_example, 2, 1.0, grid_step=1.0):
        prev_hi = 0.0
        for page in skel.pages:
            assert page.bracket.lower == pytest.approx(prev_hi + 1.0)
            assert 1 <= page.size <= 2
            assert len(set(page.prices)) <= 2
            prev_hi = page.bracket.upper


def test_dp_k1_has_no_slots(f_example):
    for skel in synthesize_bait_dp(f_example, 1, 1.0, grid_step=1.0):
        assert skel.free_slots == 0


def test_dp_point_mass():
    skels = synthesize_bait_dp(FiniteDistribution.point_mass(3.0), 2, 1.0)
    last = skels[-1]
    assert [p.prices for p in last.pages] == [(2.0,), (1.0,), (0.0,)]
    assert last.success_prob == 1.0


def test_dp_respects_supply(f_example):
    skels = synthesize_bait_dp(f_example, 2, 1.0, m=6, grid_step=1.0)
    assert max(s.n_pages for s in skels) == 3


def test_dp_empty_when_threshold_unreachable():
    # a bait page can never push utility to delta
    f = FiniteDistribution((1.0, 2.0), (0.5, 0.5))
    assert synthesize_bait_dp(f, 2, 5.0) == []


def test_bait_price_candidates_keep_zero(f_example):
    cands = bait_price_candidates(f_example, 1.0)
    assert cands[0] == 0.0
    assert 9.0 in cands and 98.0 in cands


# --- expensive items ----------------------------------------------------------------


def test_attach_reproduces_staircase_prices(f_example):
    skel = synthesize_bait_dp(f_example, 2, 1.0, grid_step=1.0)[-1]
    mechs = attach_expensive(skel, f_example, 1.0, 0.1)
    uniform_prices = {m.pages[0].prices[1] for m in mechs if len(m.pages[0]) == 2}
    for t in range(1, 11):
        assert round(98.9 - t, 9) in uniform_prices
    for mech in mechs:
        assert not validate(mech, f_example)
        assert len(mech.pages) == 11
        assert mech.pages[0].labels == (BAIT, EXPENSIVE)
        assert set(mech.pages[-1].labels) == {EXPENSIVE}


def test_attach_without_slots_adds_final_page():
    page = BaitPage(2.0, 2.0, 1, 0, UtilityBracket(1.0, 1.0), 1.0)
    skel = BaitSkeleton(1, 1.0, (page,), 1.0, 1.0)
    for mech in attach_expensive(skel, FiniteDistribution.point_mass(3.0), margin=0.1):
        assert mech.price_lists()[0] == [2.0]
        assert len(mech.pages) == 2


def test_attach_rejects_bad_margin(f_example):
    skel = synthesize_bait_dp(f_example, 2, 1.0)[0]
    with pytest.raises(ValueError):
        attach_expensive(skel, f_example, 1.0, 1.0)


def test_unsellable_expensive_items_earn_nothing(f_example):
    # expensive prices above max support + bracket top never sell
    skel = synthesize_bait_dp(f_example, 2, 1.0, grid_step=1.0)[2]
    top = skel.pages[-1].bracket.upper
    mech = Mechanism.from_prices(
        2, 1.0, [list(p.prices) + [100 + top + 5] for p in skel.pages],
        labels=[[BAIT, EXPENSIVE]] * skel.n_pages)
    assert exact_revenue(mech, f_example).expensive_sale_prob == 0.0


def test_conditional_sale_ratio_bounds(f_example):
    law = [(1.0, 1.0)]
    r = conditional_sale_ratio(97.9, 1, law, f_example, 1.0)
    assert 0.0 <= r <= 1.0
    # nothing can trigger a stop at a price above every value
    assert conditional_sale_ratio(500.0, 1, law, f_example, 1.0) == 1.0


# --- synthesizer --------------------------------------------------------------------


def test_staircase_family_contains_known_menu(f_example, staircase_menu):
    target = staircase_menu.price_lists()
    assert any(m.price_lists() == target for m in staircase_candidates(f_example, 2, 1.0,
                                                                        margin=0.1))


def test_synthesize_worked_example(f_example):
    t0 = time.perf_counter()
    mech, rep = synthesize(f_example, 2, 1.0, grid_step=1.0, margin=0.1)
    assert time.perf_counter() - t0 < 60
    assert rep.expected_revenue >= 38.3133 - 1e-4
    assert rep.expected_revenue == pytest.approx(exact_revenue(mech, f_example).expected_revenue)
    assert mech.has_labels
    assert not validate(mech, f_example)


def test_synthesize_point_mass():
    mech, rep = synthesize(FiniteDistribution.point_mass(4.0), 3, 1.0)
    assert rep.expected_revenue == pytest.approx(4.0)
    assert mech.price_lists() == [[4.0, 4.0, 4.0]]


def test_candidates_are_bait_mechanisms(f_example):
    for c in synthesize_candidates(f_example, 2, 1.0, m=8, grid_step=1.0, margin=0.1):
        assert not validate(c.mechanism, f_example)
        for page in c.mechanism.pages:
            baits = {p for p, lb in page.offers() if lb == BAIT}
            assert len(baits) <= 2
