"""The impatient buyer: page-by-page stopping rule and purchase choice."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .core import (
    LABEL_RANK,
    NEG_INF,
    InputError,
    Mechanism,
    MenuPage,
    PurchaseOutcome,
    continues,
    utility,
)


@dataclass(frozen=True)
class BuyerTrace:
    page_utilities: tuple[float, ...]
    best_utilities: tuple[float, ...]
    best_prices: tuple[float | None, ...]
    outcome: PurchaseOutcome


def offer_key(price, label):
    return (price, LABEL_RANK[label])


def best_offer(page: MenuPage, values: Sequence[float]):
    """Max utility on a page and the offer attaining it (highest price wins ties)."""
    best = (NEG_INF, None, None)
    for (price, label), v in zip(page.offers(), values):
        u = utility(v, price)
        if u > best[0] or (u == best[0] and offer_key(price, label) > offer_key(best[1], best[2])):
            best = (u, price, label)
    return best


def merge_best(best, offer):
    """Fold a page's best offer into the running best (u, price, label)."""
    if offer[0] > best[0]:
        return offer
    if offer[0] == best[0] and offer[1] is not None:
        if best[1] is None or offer_key(offer[1], offer[2]) > offer_key(best[1], best[2]):
            return offer
    return best


def simulate(mech: Mechanism, profile: Sequence[float]) -> BuyerTrace:
    if len(profile) != mech.n_items:
        raise InputError(
            f"profile has {len(profile)} values but the mechanism offers {mech.n_items} items"
        )
    page_utils, best_utils, best_prices = [], [], []
    best = (NEG_INF, None, None)
    prev = 0.0
    pos = 0
    pages = list(mech.pages) + [MenuPage(())]
    for t, page in enumerate(pages, start=1):
        offer = best_offer(page, profile[pos:pos + len(page)])
        pos += len(page)
        best = merge_best(best, offer)
        page_utils.append(offer[0])
        best_utils.append(best[0])
        best_prices.append(best[1])
        if continues(offer[0], prev, mech.delta):
            prev = offer[0]
            continue
        if best[0] >= 0:
            outcome = PurchaseOutcome(t, best[1], best[0], best[2])
        else:
            outcome = PurchaseOutcome(t, None, 0.0, None)
        return BuyerTrace(tuple(page_utils), tuple(best_utils), tuple(best_prices), outcome)
    raise AssertionError("the trailing empty page always stops the buyer")


def revenue(mech: Mechanism, profile: Sequence[float]) -> float:
    price = simulate(mech, profile).outcome.bought_price
    return 0.0 if price is None else price
