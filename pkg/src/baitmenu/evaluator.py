"""Expected revenue of a paged mechanism: exact state propagation and seeded Monte Carlo.

The exact evaluator tracks the joint law of (previous page utility, best utility so
far, price and label of the offer attaining it). Each page contributes an
independent outcome (max utility on the page, tie-broken offer), so the state
distribution is pushed forward page by page and stopped mass is credited as it
leaves. States are keyed on utilities snapped to the 1e-9 grid.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import asdict, dataclass

import numpy as np

from .buyer import merge_best, offer_key
from .core import (
    EXPENSIVE,
    LABEL_RANK,
    NEG_INF,
    TOL,
    FiniteDistribution,
    InputError,
    Mechanism,
    MenuPage,
    canon,
)

DEFAULT_CHUNK = 1 << 17


@dataclass(frozen=True)
class PageOutcome:
    utility: float
    price: float | None
    label: str | None
    prob: float


@dataclass(frozen=True)
class RevenueReport:
    expected_revenue: float
    sale_prob: float
    stop_probs: tuple[float, ...]
    expected_utility: float
    expensive_sale_prob: float | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["stop_probs"] = list(self.stop_probs)
        return d

    def survival(self) -> list[float]:
        """Pr[buyer sees page t] for t = 1 .. len(stop_probs)."""
        out, seen = [], 1.0
        for s in self.stop_probs:
            out.append(max(seen, 0.0))
            seen -= s
        return out

    CSV_FIELDS = ("expected_revenue", "sale_prob", "expected_utility",
                  "expensive_sale_prob", "stop_probs")

    def csv_row(self) -> dict:
        return {
            "expected_revenue": f"{self.expected_revenue:.10g}",
            "sale_prob": f"{self.sale_prob:.10g}",
            "expected_utility": f"{self.expected_utility:.10g}",
            "expensive_sale_prob": ""
            if self.expensive_sale_prob is None else f"{self.expensive_sale_prob:.10g}",
            "stop_probs": ";".join(f"{s:.10g}" for s in self.stop_probs),
        }


class _ItemUtility:
    """Law of one item's utility v - p on the canonical grid."""

    def __init__(self, f: FiniteDistribution, price: float):
        acc = defaultdict(float)
        for v, q in zip(f.support, f.probs):
            acc[canon(v - price)] += q
        self.atoms = sorted(acc)
        self.cum = np.cumsum([acc[u] for u in self.atoms])
        self.cum[-1] = 1.0

    def le(self, u: float) -> float:
        i = int(np.searchsorted(self.atoms, u, side="right"))
        return float(self.cum[i - 1]) if i else 0.0

    def lt(self, u: float) -> float:
        i = int(np.searchsorted(self.atoms, u, side="left"))
        return float(self.cum[i - 1]) if i else 0.0


def page_outcome_distribution(page: MenuPage, f: FiniteDistribution) -> list[PageOutcome]:
    """Exact joint law of the page's max utility and the tie-broken offer attaining it."""
    if len(page) == 0:
        return [PageOutcome(NEG_INF, None, None, 1.0)]
    counts = defaultdict(int)
    for price, label in page.offers():
        counts[(price, label)] += 1
    groups = sorted(counts, key=lambda g: offer_key(*g))
    laws = [_ItemUtility(f, p) for p, _ in groups]
    levels = sorted({u for law in laws for u in law.atoms})
    out = []
    for u in levels:
        le = [law.le(u) ** counts[g] for law, g in zip(laws, groups)]
        lt = [law.lt(u) ** counts[g] for law, g in zip(laws, groups)]
        for j, g in enumerate(groups):
            hit = le[j] - lt[j]
            if hit <= 0.0:
                continue
            q = hit * math.prod(lt[j + 1:]) * math.prod(le[:j])
            if q > 0.0:
                out.append(PageOutcome(u, g[0], g[1], q))
    return out


def exact_revenue(mech: Mechanism, f: FiniteDistribution) -> RevenueReport:
    """Exact expected revenue under the impatient-buyer semantics."""
    if not math.isfinite(len(mech.pages)):
        raise InputError("exact evaluation needs a finite list of pages")
    delta = mech.delta
    # state: (prev page utility, best utility, best price, best label) -> mass
    states = {(0.0, NEG_INF, None, None): 1.0}
    stop_probs = []
    rev = sale = util = exp_sale = 0.0
    pages = list(mech.pages) + [MenuPage(())]
    for page in pages:
        dist = page_outcome_distribution(page, f)
        nxt = defaultdict(float)
        stopped = 0.0
        for (prev, bu, bp, bl), mass in states.items():
            threshold = prev + delta - TOL
            best = (bu, bp, bl)
            for o in dist:
                m = mass * o.prob
                nb = merge_best(best, (o.utility, o.price, o.label))
                if o.utility >= threshold:
                    nxt[(o.utility, nb[0], nb[1], nb[2])] += m
                    continue
                stopped += m
                if nb[0] >= 0:
                    sale += m
                    rev += m * nb[1]
                    util += m * nb[0]
                    if nb[2] == EXPENSIVE:
                        exp_sale += m
        stop_probs.append(stopped)
        states = nxt
        if not states:
            break
    stop_probs += [0.0] * (len(pages) - len(stop_probs))
    return RevenueReport(
        expected_revenue=rev,
        sale_prob=sale,
        stop_probs=tuple(stop_probs),
        expected_utility=util,
        expensive_sale_prob=exp_sale if mech.has_labels else None,
    )


# --- Monte Carlo -------------------------------------------------------------


@dataclass(frozen=True)
class MonteCarloEstimate:
    mean: float
    stderr: float
    samples: int
    seed: int
    sale_prob: float

    def to_dict(self) -> dict:
        return asdict(self)


def _page_arrays(page: MenuPage):
    order = sorted(range(len(page)), key=lambda i: offer_key(page.prices[i], page.label(i)))
    prices = np.array([page.prices[i] for i in order], dtype=float)
    ranks = np.array([LABEL_RANK[page.label(i)] for i in order], dtype=float)
    return np.array(order, dtype=int), prices, ranks


def simulate_batch(mech: Mechanism, values: np.ndarray):
    """Vectorised buyer over rows of ``values`` (n_samples x n_items).

    Returns (revenue, stop_page, bought_rank) arrays; bought_rank is -1 for no sale.
    """
    n = values.shape[0]
    prev = np.zeros(n)
    best_u = np.full(n, NEG_INF)
    best_p = np.full(n, NEG_INF)
    best_r = np.full(n, -1.0)
    alive = np.ones(n, dtype=bool)
    revenue = np.zeros(n)
    stop_page = np.zeros(n, dtype=int)
    bought_rank = np.full(n, -1.0)
    pos = 0
    pages = list(mech.pages) + [MenuPage(())]
    for t, page in enumerate(pages, start=1):
        if len(page):
            order, prices, ranks = _page_arrays(page)
            cols = values[:, pos + order]
            pos += len(page)
            u_all = np.round(cols - prices, 9)
            u = u_all.max(axis=1)
            hit = u_all == u[:, None]
            last = len(page) - 1 - np.argmax(hit[:, ::-1], axis=1)
            p, r = prices[last], ranks[last]
        else:
            u = np.full(n, NEG_INF)
            p = np.full(n, NEG_INF)
            r = np.full(n, -1.0)
        take = (u > best_u) | ((u == best_u) & ((p > best_p) | ((p == best_p) & (r > best_r))))
        best_u = np.where(take, u, best_u)
        best_p = np.where(take, p, best_p)
        best_r = np.where(take, r, best_r)
        go = u >= prev + mech.delta - TOL
        stop = alive & ~go
        buy = stop & (best_u >= 0)
        revenue[buy] = best_p[buy]
        bought_rank[buy] = best_r[buy]
        stop_page[stop] = t
        alive &= go
        prev = u
        if not alive.any():
            break
    return revenue, stop_page, bought_rank


def monte_carlo_revenue(mech: Mechanism, f: FiniteDistribution, samples: int, seed: int = 0,
                        chunk_size: int = DEFAULT_CHUNK) -> MonteCarloEstimate:
    """Seeded Monte Carlo estimate; chunk ``i`` draws from the i-th spawned sub-seed."""
    if samples < 1:
        raise InputError("samples must be >= 1")
    n_chunks = -(-samples // chunk_size)
    subseeds = np.random.SeedSequence(seed).spawn(n_chunks)
    total = total_sq = sold = 0.0
    for i, ss in enumerate(subseeds):
        size = min(chunk_size, samples - i * chunk_size)
        rng = np.random.default_rng(ss)
        values = f.sample(rng, (size, mech.n_items))
        rev, _, rank = simulate_batch(mech, values)
        total += rev.sum()
        total_sq += np.dot(rev, rev)
        sold += np.count_nonzero(rank >= 0)
    mean = total / samples
    if samples > 1:
        var = max(total_sq - samples * mean * mean, 0.0) / (samples - 1)
        stderr = math.sqrt(var / samples)
    else:
        stderr = 0.0
    return MonteCarloEstimate(float(mean), float(stderr), samples, seed, sold / samples)
