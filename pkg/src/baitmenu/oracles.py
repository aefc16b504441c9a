"""Static pricing yardsticks: uniform pricing, the greedy buyer, and sequential posted pricing.

A buyer with value exactly equal to the price buys (utility 0 is acceptable), so
sale probabilities use Pr[v >= p] = 1 - Pr[v < p]. Candidate prices are the support
points of F: between support points, raising the price keeps the sale probability.
"""

from __future__ import annotations

from itertools import combinations_with_replacement, product
from typing import Sequence

from .core import FiniteDistribution


def uniform_price_revenue(ell: int, p: float, f: FiniteDistribution) -> float:
    """Revenue of ``ell`` items all posted at price ``p``."""
    if ell < 1 or p < 0:
        raise ValueError("need ell >= 1 and p >= 0")
    return (1.0 - f.cdf_strict(p) ** ell) * p


def optimal_uniform_price(ell: int, f: FiniteDistribution) -> tuple[float, float]:
    """Best uniform price over ``ell`` items; ties go to the lower price."""
    best_p, best_r = f.support[0], uniform_price_revenue(ell, f.support[0], f)
    for p in f.support[1:]:
        r = uniform_price_revenue(ell, p, f)
        if r > best_r:
            best_p, best_r = p, r
    return best_p, best_r


def greedy_revenue(menu: Sequence[float], f: FiniteDistribution) -> float:
    """Buyer scans prices high to low and takes the first with v >= p."""
    rev, none_yet = 0.0, 1.0
    for p in sorted(menu, reverse=True):
        rev += none_yet * f.sf(p) * p
        none_yet *= f.cdf_strict(p)
    return rev


def spm_revenue(prices: Sequence[float], f: FiniteDistribution) -> float:
    """One item offered to i.i.d. bidders in the given order at the given prices."""
    rev, unsold = 0.0, 1.0
    for p in prices:
        rev += unsold * f.sf(p) * p
        unsold *= f.cdf_strict(p)
    return rev


def optimal_spm(n: int, f: FiniteDistribution) -> tuple[list[float], float]:
    """Backward induction over support prices; returns prices in offer order and revenue."""
    if n < 1:
        raise ValueError("n must be >= 1")
    cont = 0.0
    stage_prices = []
    for _ in range(n):
        best_p, best_r = None, -1.0
        for p in f.support:
            r = f.sf(p) * p + f.cdf_strict(p) * cont
            if r > best_r:
                best_p, best_r = p, r
        stage_prices.append(best_p)
        cont = best_r
    # the stage computed last is offered first
    return stage_prices[::-1], cont


def optimal_uspm(n: int, f: FiniteDistribution) -> tuple[float, float]:
    """Best single price posted to all n sequential bidders."""
    if n < 1:
        raise ValueError("n must be >= 1")
    best_p, best_r = None, -1.0
    for p in f.support:
        r = spm_revenue([p] * n, f)
        if r > best_r:
            best_p, best_r = p, r
    return best_p, best_r


def exhaustive_greedy(n: int, f: FiniteDistribution) -> tuple[list[float], float]:
    """Best greedy menu of exactly n support prices, by enumeration."""
    best_m, best_r = None, -1.0
    for menu in combinations_with_replacement(sorted(f.support, reverse=True), n):
        r = greedy_revenue(menu, f)
        if r > best_r:
            best_m, best_r = list(menu), r
    return best_m, best_r


def exhaustive_spm(n: int, f: FiniteDistribution) -> tuple[list[float], float]:
    """Best SPM price vector over supp(F)^n in any order, by enumeration."""
    best_v, best_r = None, -1.0
    for prices in product(f.support, repeat=n):
        r = spm_revenue(prices, f)
        if r > best_r:
            best_v, best_r = list(prices), r
    return best_v, best_r
