"""Bait mechanisms: cheap "bait" items keep the buyer browsing while expensive items earn revenue.

Construction pipeline:

* a dynamic program over (upper utility bound of the current bait page, accumulated
  free slots) that chains bait pages whose utilities fall in disjoint brackets
  ``[lo_t, hi_t]`` with ``lo_t = hi_{t-1} + delta``; the buyer then always continues
  while every bait page lands in its bracket;
* attachment of expensive items into the free slots, either at a uniform price or
  per page under a conditional-sale condition;
* a synthesizer that scores every candidate with the exact evaluator.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import (
    BAIT,
    EXPENSIVE,
    NEG_INF,
    TOL,
    FiniteDistribution,
    Mechanism,
    MenuPage,
    canon,
)
from .evaluator import RevenueReport, exact_revenue, page_outcome_distribution
from .oracles import optimal_uniform_price

log = logging.getLogger(__name__)

ACCEPT_PROB = 1 / 3


@dataclass(frozen=True)
class UtilityBracket:
    lower: float
    upper: float

    def __post_init__(self):
        if self.lower > self.upper + TOL:
            raise ValueError(f"empty bracket [{self.lower}, {self.upper}]")

    def __contains__(self, u: float) -> bool:
        return self.lower <= u <= self.upper


@dataclass(frozen=True)
class SpreadingCertificate:
    eta: float
    witness: float


@dataclass(frozen=True)
class BaitPage:
    p_lo: float
    p_hi: float
    n_lo: int
    n_hi: int
    bracket: UtilityBracket
    prob: float

    @property
    def size(self) -> int:
        return self.n_lo + self.n_hi

    @property
    def prices(self) -> tuple[float, ...]:
        return (self.p_lo,) * self.n_lo + (self.p_hi,) * self.n_hi


@dataclass(frozen=True)
class BaitSkeleton:
    k: int
    delta: float
    pages: tuple[BaitPage, ...]
    success_prob: float
    grid_step: float
    supply: float = math.inf

    @property
    def n_pages(self) -> int:
        return len(self.pages)

    @property
    def free_slots(self) -> int:
        return sum(self.k - p.size for p in self.pages)

    def bait_mechanism(self) -> Mechanism:
        return Mechanism.from_prices(
            self.k, self.delta, [p.prices for p in self.pages], supply=self.supply,
            labels=[[BAIT] * p.size for p in self.pages],
        )


@dataclass
class Candidate:
    family: str
    mechanism: Mechanism
    report: RevenueReport | None = None
    meta: dict = field(default_factory=dict)

    @property
    def revenue(self) -> float:
        return self.report.expected_revenue


# --- distribution helpers ----------------------------------------------------


def spreading_coefficient(f: FiniteDistribution, delta: float) -> SpreadingCertificate:
    """Largest eta with Pr[v >= p | v >= p - delta] >= eta at every support point."""
    if delta <= 0:
        raise ValueError("delta must be > 0")
    eta, witness = 1.0, f.support[0]
    for p in f.support:
        r = f.sf(p) / f.sf(p - delta)
        if r < eta:
            eta, witness = r, p
    return SpreadingCertificate(eta, witness)


def _item_le(f: FiniteDistribution, price: float, u: float) -> float:
    """Pr[utility of one item at ``price`` <= u]."""
    return sum(q for v, q in zip(f.support, f.probs) if canon(v - price) <= u)


def _item_lt(f: FiniteDistribution, price: float, u: float) -> float:
    return sum(q for v, q in zip(f.support, f.probs) if canon(v - price) < u)


def bracket_probability(prices: Sequence[float], bracket: UtilityBracket,
                        f: FiniteDistribution) -> float:
    """Pr[max utility over ``prices`` lies in the bracket] in closed form."""
    lo, hi = canon(bracket.lower), canon(bracket.upper)
    upto = math.prod(_item_le(f, p, hi) for p in prices)
    below = math.prod(_item_lt(f, p, lo) for p in prices)
    return max(upto - below, 0.0)


def median_thresholds(dists) -> list[float]:
    """Thresholds 0 = a_0 <= a_1 <= ... <= a_n < a_{n+1} = inf from lower medians.

    ``dists`` holds independent finite laws, each a FiniteDistribution or a
    ``(support, probs)`` pair (supports may be negative here). Medians are
    clamped to be nondecreasing.
    """
    out = [0.0]
    for d in dists:
        support, probs = (d.support, d.probs) if hasattr(d, "support") else d
        order = np.argsort(support)
        cum = np.cumsum(np.asarray(probs, dtype=float)[order])
        i = int(np.searchsorted(cum, 0.5 - 1e-12, side="left"))
        med = float(np.asarray(support, dtype=float)[order][min(i, len(cum) - 1)])
        out.append(max(med, out[-1]))
    out.append(math.inf)
    return out


# --- two-price reduction ---------------------------------------------------------


def _combo(x: float, n: int, a: float, b: float) -> float:
    """x*a + (n-x)*b with 0 * -inf taken as 0."""
    left = x * a if x > 0 else 0.0
    right = (n - x) * b if n - x > 0 else 0.0
    return left + right


def _roots(x_coef_a: float, x_coef_b: float, target: float, n: int) -> list[float]:
    """Where x*a + (n-x)*b crosses ``target`` (finite coefficients only)."""
    if not all(map(math.isfinite, (x_coef_a, x_coef_b, target))):
        return []
    slope = x_coef_a - x_coef_b
    if slope == 0:
        return []
    return [(target - n * x_coef_b) / slope]


def two_price_reduction(prices: Sequence[float], bracket: UtilityBracket,
                        f: FiniteDistribution) -> tuple[float, float, int]:
    """Replace a bait page by one with at most two distinct prices.

    Each price maps to the point (ln Pr[u_i <= hi], ln Pr[u_i < lo]). Their centre of
    mass lies in the convex hull, so some pair of points admits a weight x in [0, n]
    whose combination is at least the mean in the first coordinate and at most it in
    the second. Putting ceil(x) items at the lower price of the pair and the rest at
    the higher keeps Pr[utility in bracket] >= 1 - 2*eps. Among feasible pairs the one
    with the largest resulting probability is returned as (p_lo, p_hi, count_lo).
    """
    prices = [float(p) for p in prices]
    n = len(prices)
    if n == 0:
        raise ValueError("prices must be nonempty")
    lo, hi = canon(bracket.lower), canon(bracket.upper)
    if len(set(prices)) == 1:
        return prices[0], prices[0], n
    up = [_item_le(f, p, hi) for p in prices]
    down = [_item_lt(f, p, lo) for p in prices]
    eps = 1.0 - (math.prod(up) - math.prod(down))
    if not eps < 0.5:
        raise ValueError(f"two-price reduction needs eps < 1/2 (got {eps:.6g})")
    with np.errstate(divide="ignore"):
        A = np.log(up)
        B = np.log(down)
    sum_a, sum_b = float(A.sum()), float(B.sum())
    slack = 1e-12 * n

    best = None
    for i in range(n):
        for j in range(i, n):
            # i1 carries weight x and must be the cheaper price
            i1, i2 = (i, j) if prices[i] <= prices[j] else (j, i)
            a1, a2, b1, b2 = A[i1], A[i2], B[i1], B[i2]
            cands = {0.0, float(n)}
            cands.update(_roots(a1, a2, sum_a, n))
            cands.update(_roots(b1, b2, sum_b, n))
            cands = sorted(c for c in cands if 0.0 <= c <= n)
            cands += [(u + v) / 2 for u, v in zip(cands, cands[1:])]
            for x in cands:
                if _combo(x, n, a1, a2) < sum_a - slack:
                    continue
                cb = _combo(x, n, b1, b2)
                if not (cb <= sum_b + slack or (cb == NEG_INF)):
                    continue
                c = min(n, math.ceil(x - 1e-9))
                q = (up[i1] ** c * up[i2] ** (n - c)) - (down[i1] ** c * down[i2] ** (n - c))
                if best is None or q > best[0] + 1e-15:
                    best = (q, prices[i1], prices[i2], c)
    if best is None or best[0] < 1.0 - 2.0 * eps - 1e-9:
        raise RuntimeError("two-price reduction found no feasible pair; this is a bug")
    _, p1, p2, c = best
    if c == n or c == 0 or p1 == p2:
        p = p1 if c > 0 else p2
        return p, p, n
    return p1, p2, c


# --- the dynamic program ---------------------------------------------------------


def utility_grid(f: FiniteDistribution, grid_step: float) -> list[float]:
    n = int(math.floor(f.vmax / grid_step + 1e-9))
    return [canon(i * grid_step) for i in range(n + 1)]


def bait_price_candidates(f: FiniteDistribution, grid_step: float) -> list[float]:
    grid = utility_grid(f, grid_step)
    return sorted({max(canon(v - g), 0.0) + 0.0 for v in f.support for g in grid if v - g >= -TOL})


class _PageSearch:
    """Best bait page (<= 2 prices, given size) for a bracket, memoised."""

    def __init__(self, f: FiniteDistribution, prices: Sequence[float]):
        self.f = f
        self.prices = np.asarray(prices, dtype=float)
        self.values = np.asarray(f.support, dtype=float)
        self.probs = np.asarray(f.probs, dtype=float)
        # item utility for each (price, value)
        self.util = np.round(self.values[None, :] - self.prices[:, None], 9)
        self.cache: dict = {}

    def classes(self, lo: float, hi: float):
        """(upto, below, representative price) per equivalence class of prices."""
        upto = ((self.util <= hi) * self.probs).sum(axis=1)
        below = ((self.util < lo) * self.probs).sum(axis=1)
        useful = upto - below > 0
        reps: dict = {}
        for i in np.flatnonzero(useful):
            key = (round(float(upto[i]), 15), round(float(below[i]), 15))
            p = float(self.prices[i])
            if key not in reps or p > reps[key][2]:
                reps[key] = (float(upto[i]), float(below[i]), p)
        return sorted(reps.values(), key=lambda r: r[2])

    def best(self, lo: float, hi: float, k: int):
        """For each size b = 1..k, the best (prob, p_lo, p_hi, n_lo)."""
        key = (lo, hi)
        if key in self.cache:
            return self.cache[key]
        cls = self.classes(lo, hi)
        out = []
        for b in range(1, k + 1):
            top = None
            for i, (u1, d1, p1) in enumerate(cls):
                q = u1 ** b - d1 ** b
                if top is None or q > top[0]:
                    top = (q, p1, p1, b)
                for u2, d2, p2 in cls[i + 1:]:
                    for c in range(1, b):
                        q = u1 ** c * u2 ** (b - c) - d1 ** c * d2 ** (b - c)
                        if q > top[0]:
                            top = (q, p1, p2, c)
            out.append(top)
        self.cache[key] = out
        return out


def _pareto(states: dict) -> dict:
    """Drop (hi, ell) states dominated by one with lower hi, more slots, higher prob."""
    items = sorted(states.items(), key=lambda kv: (kv[0][0], -kv[0][1], -kv[1][0]))
    kept: dict = {}
    frontier: list[tuple[int, float]] = []  # (ell, prob) of kept states with smaller hi
    for (hi, ell), val in items:
        prob = val[0]
        if any(e >= ell and p >= prob for e, p in frontier):
            continue
        kept[(hi, ell)] = val
        frontier.append((ell, prob))
    return kept


def synthesize_bait_dp(f: FiniteDistribution, k: int, delta: float, m: float = math.inf,
                       grid_step: float | None = None, accept: float = ACCEPT_PROB,
                       max_pages: int | None = None) -> list[BaitSkeleton]:
    """Chain bait pages maximizing the probability every page lands in its bracket.

    Table ``D[hi, ell]`` at stage t holds the best success probability of reaching
    stage t with the current bait utility bracket topped at ``hi`` and ``ell`` free
    slots so far. The next bracket starts at ``hi + delta``. One skeleton per page
    count T (the largest ``ell`` reaching probability ``accept``) is returned.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if delta <= 0:
        raise ValueError("delta must be > 0")
    grid_step = delta if grid_step is None else grid_step
    if grid_step <= 0:
        raise ValueError("grid_step must be > 0")
    grid = utility_grid(f, grid_step)
    search = _PageSearch(f, bait_price_candidates(f, grid_step))
    t_max = int(m // k) if math.isfinite(m) else None
    if max_pages is not None:
        t_max = max_pages if t_max is None else min(t_max, max_pages)

    # state -> (prob, parent state, BaitPage)
    stages = [{(0.0, 0): (1.0, None, None)}]
    skeletons = []
    t = 0
    while stages[-1] and (t_max is None or t < t_max):
        t += 1
        nxt: dict = {}
        for (prev_hi, ell), (prob, _, _) in stages[-1].items():
            lo = canon(prev_hi + delta)
            if lo > f.vmax:
                continue
            for hi in grid:
                if hi < lo:
                    continue
                for b, top in enumerate(search.best(lo, hi, k), start=1):
                    if top is None:
                        continue
                    q, p1, p2, c = top
                    pr = prob * q
                    if pr < accept - 1e-12:
                        continue
                    key = (hi, ell + k - b)
                    if key not in nxt or pr > nxt[key][0]:
                        page = BaitPage(p1, p2, c, b - c, UtilityBracket(lo, hi), q)
                        nxt[key] = (pr, (prev_hi, ell), page)
        nxt = _pareto(nxt)
        if not nxt:
            break
        stages.append(nxt)
        (hi, ell), (pr, _, _) = max(nxt.items(), key=lambda kv: (kv[0][1], kv[1][0], -kv[0][0]))
        skeletons.append(_backtrack(stages, (hi, ell), k, delta, grid_step, m))
    return skeletons


def _backtrack(stages, key, k, delta, grid_step, m) -> BaitSkeleton:
    pages = []
    prob = stages[-1][key][0]
    for stage in reversed(stages[1:]):
        _, parent, page = stage[key]
        pages.append(page)
        key = parent
    pages.reverse()
    return BaitSkeleton(k, delta, tuple(pages), prob, grid_step, m)


# --- expensive items ---------------------------------------------------------------


def _fill(skel: BaitSkeleton, page_prices: Sequence[float], final_price: float | None,
          supply: float) -> Mechanism:
    """Bait pages with free slots priced per page, plus an optional final expensive page."""
    remaining = supply - sum(p.size for p in skel.pages)
    pages, labels = [], []
    for page, p_exp in zip(skel.pages, page_prices):
        n_exp = int(min(skel.k - page.size, max(remaining, 0)))
        remaining -= n_exp
        pages.append(list(page.prices) + [p_exp] * n_exp)
        labels.append([BAIT] * page.size + [EXPENSIVE] * n_exp)
    if final_price is not None:
        n_exp = int(min(skel.k, max(remaining, 0)))
        if n_exp:
            pages.append([final_price] * n_exp)
            labels.append([EXPENSIVE] * n_exp)
    return Mechanism.from_prices(skel.k, skel.delta, pages, supply=supply, labels=labels)


def _bracket_law(page: BaitPage, f: FiniteDistribution):
    """Bait utility law of a page conditioned on landing in its bracket."""
    dist = page_outcome_distribution(MenuPage(page.prices), f)
    inside = [(o.utility, o.prob) for o in dist if o.utility in page.bracket]
    total = sum(q for _, q in inside)
    return [(u, q / total) for u, q in inside] if total > 0 else []


def conditional_sale_ratio(price: float, n_exp: int, bait_law, f: FiniteDistribution,
                           delta: float) -> float:
    """Pr[best expensive utility >= u_b | it makes the buyer stop] for the next bait page.

    The buyer stops when the best expensive utility exceeds u_b - delta, and then takes
    the expensive item when its utility is at least u_b.
    """
    num = sum(q * (1.0 - f.cdf_strict(price + u) ** n_exp) for u, q in bait_law)
    den = sum(q * (1.0 - f.cdf(price - delta + u) ** n_exp) for u, q in bait_law)
    return 1.0 if den <= 0 else num / den


def _page_price(lo_p, hi_p, n_exp, bait_law, f, delta) -> float | None:
    """Largest price in [lo_p, hi_p] meeting the conditional-sale ratio >= 1/2."""
    pts = {lo_p, hi_p}
    for u, _ in bait_law:
        for v in f.support:
            pts.update((v - u, v - u + delta))
    pts = sorted(p for p in pts if lo_p - TOL <= p <= hi_p + TOL)
    pts += [(a + b) / 2 for a, b in zip(pts, pts[1:])]
    for p in sorted(pts, reverse=True):
        if p > 0 and conditional_sale_ratio(p, n_exp, bait_law, f, delta) >= 0.5 - 1e-12:
            return canon(p)
    return None


def attach_expensive(skel: BaitSkeleton, f: FiniteDistribution, delta: float | None = None,
                     margin: float | None = None) -> list[Mechanism]:
    """Candidate bait mechanisms built on one skeleton.

    * uniform branch: every free slot and a final page of k items at one price p^o,
      for p^o in {v - g - margin > 0} and for the bound-derived p* - hi_T;
    * per-page branch: page t priced in [p*/3, p*/2] so that, given the next bait
      page's conditional utility law, a stop caused by the expensive items ends in an
      expensive sale with probability >= 1/2; final page at p*/2.
    Here p* is the optimal uniform price for half the free slots.
    """
    delta = skel.delta if delta is None else delta
    margin = delta / 10 if margin is None else margin
    if not 0 < margin < delta:
        raise ValueError("margin must lie in (0, delta)")
    supply = skel.supply
    n = skel.n_pages
    grid = utility_grid(f, skel.grid_step)
    out = []

    uniform = sorted({canon(v - g - margin) for v in f.support for g in grid})
    ell = skel.free_slots
    p_star = optimal_uniform_price(max(1, ell // 2), f)[0]
    if n:
        uniform.append(canon(p_star - skel.pages[-1].bracket.upper))
    seen = set()
    for p in uniform:
        if p <= 0 or p in seen:
            continue
        seen.add(p)
        out.append(_fill(skel, [p] * n, p, supply))

    if ell > 0 and n:
        lo_p, hi_p = p_star / 3, p_star / 2
        per_page = []
        for t, page in enumerate(skel.pages):
            n_exp = skel.k - page.size
            if t + 1 >= n or n_exp == 0:
                per_page.append(canon(hi_p))
                continue
            law = _bracket_law(skel.pages[t + 1], f)
            p = _page_price(lo_p, hi_p, n_exp, law, f, delta)
            if p is None:
                per_page = None
                break
            per_page.append(p)
        if per_page is not None and hi_p > 0:
            out.append(_fill(skel, per_page, canon(hi_p), supply))

    if not out:
        out.append(skel.bait_mechanism())
    return out


# --- the synthesizer -------------------------------------------------------------


def single_page_candidate(f: FiniteDistribution, k: int, delta: float, m: float) -> Mechanism:
    size = int(min(k, m)) if math.isfinite(m) else k
    if size < 1:
        return Mechanism(k, delta, (), m)
    p, _ = optimal_uniform_price(size, f)
    return Mechanism.from_prices(k, delta, [[p] * size], supply=m, labels=[[EXPENSIVE] * size])


def staircase_candidates(f: FiniteDistribution, k: int, delta: float, m: float = math.inf,
                         margin: float | None = None, max_pages: int = 64) -> list[Mechanism]:
    """One bait per page at v_low - t*delta; k-1 expensive at v_high - (t+s)*delta - margin."""
    margin = delta / 10 if margin is None else margin
    out = []
    if k < 2:
        return out
    t_cap = max_pages if not math.isfinite(m) else min(max_pages, int(m // k))
    for v_low in f.support:
        for v_high in f.support:
            if v_high <= v_low:
                continue
            t_hi = min(t_cap, int(math.floor(v_low / delta + 1e-9)))
            for shift in (0, 1, 2):
                exp_price = [canon(v_high - (t + shift) * delta - margin) for t in range(1, t_hi + 2)]
                for T in range(1, t_hi + 1):
                    if exp_price[T - 1] <= 0:
                        break
                    pages = [[canon(v_low - t * delta)] + [exp_price[t - 1]] * (k - 1)
                             for t in range(1, T + 1)]
                    labels = [[BAIT] + [EXPENSIVE] * (k - 1)] * T
                    out.append(Mechanism.from_prices(k, delta, pages, supply=m, labels=labels))
                    final = exp_price[T]
                    if final > 0 and (not math.isfinite(m) or (T + 1) * k <= m):
                        out.append(Mechanism.from_prices(
                            k, delta, pages + [[final] * k], supply=m,
                            labels=labels + [[EXPENSIVE] * k]))
    return out


def _rank_key(c: Candidate):
    mech = c.mechanism
    return (-round(c.revenue, 10), len(mech.pages), sum(mech.prices()))


def synthesize_candidates(f: FiniteDistribution, k: int, delta: float, m: float = math.inf,
                          grid_step: float | None = None, margin: float | None = None,
                          accept: float = ACCEPT_PROB) -> list[Candidate]:
    """Every candidate mechanism, exactly scored, best first."""
    grid_step = delta if grid_step is None else grid_step
    margin = delta / 10 if margin is None else margin
    pool = [Candidate("single_page", single_page_candidate(f, k, delta, m))]
    for skel in synthesize_bait_dp(f, k, delta, m, grid_step, accept=accept):
        for mech in attach_expensive(skel, f, delta, margin):
            pool.append(Candidate("dp_bait", mech, meta={"T": skel.n_pages,
                                                        "success_prob": skel.success_prob}))
    for mech in staircase_candidates(f, k, delta, m, margin):
        pool.append(Candidate("staircase", mech))
    seen = set()
    unique = []
    for c in pool:
        key = tuple(tuple(p) for p in c.mechanism.price_lists())
        if key in seen:
            continue
        seen.add(key)
        c.report = exact_revenue(c.mechanism, f)
        unique.append(c)
    unique.sort(key=_rank_key)
    log.debug("scored %d candidates", len(unique))
    return unique


def synthesize(f: FiniteDistribution, k: int, delta: float, m: float = math.inf,
               grid_step: float | None = None, margin: float | None = None,
               accept: float = ACCEPT_PROB) -> tuple[Mechanism, RevenueReport]:
    best = synthesize_candidates(f, k, delta, m, grid_step, margin, accept)[0]
    return best.mechanism, best.report
