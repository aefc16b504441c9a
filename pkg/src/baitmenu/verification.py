"""Numerical checks of the structural claims, plus a brute-force optimal-mechanism oracle."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .buyer import revenue as trace_revenue
from .core import FiniteDistribution, InputError, Mechanism, MenuPage, validate
from .evaluator import exact_revenue, page_outcome_distribution
from .oracles import (
    exhaustive_greedy,
    greedy_revenue,
    optimal_spm,
    optimal_uniform_price,
    optimal_uspm,
)
from .synthesis import (
    UtilityBracket,
    bracket_probability,
    median_thresholds,
    synthesize,
    synthesize_bait_dp,
    two_price_reduction,
)

TOP_LIKE_CAP = 1 / 12
SURVIVAL = 11 / 12
BRUTE_FORCE_CAP = 10 ** 7
RATIO_FLOOR = 0.5
RATIO_FLAG = 0.9


@dataclass
class ClaimResult:
    claim: str
    instances: int = 0
    violations: int = 0
    worst_slack: float = math.inf
    flagged: int = 0
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def record(self, slack: float, tol: float = 1e-9) -> None:
        self.instances += 1
        self.worst_slack = min(self.worst_slack, slack)
        if slack < -tol:
            self.violations += 1

    CSV_FIELDS = ("claim", "instances", "violations", "worst_slack", "flagged", "passed", "note")

    def csv_row(self) -> dict:
        return {
            "claim": self.claim,
            "instances": self.instances,
            "violations": self.violations,
            "worst_slack": f"{self.worst_slack:.6g}",
            "flagged": self.flagged,
            "passed": "yes" if self.passed else "no",
            "note": self.note,
        }


# --- TOP / bait split ------------------------------------------------------------


@dataclass(frozen=True)
class TopSplit:
    exp_pages: tuple[tuple[float, ...], ...]
    bait_pages: tuple[tuple[float, ...], ...]
    top_bait_price: float
    ell: int
    top_like_prob: float
    like_prob_with_top_bait: float | None

    @property
    def sandwich_holds(self) -> bool:
        left = self.top_like_prob <= TOP_LIKE_CAP + 1e-12
        if self.like_prob_with_top_bait is None:
            return left
        return left and TOP_LIKE_CAP < self.like_prob_with_top_bait + 1e-12

    def expensive_prices(self) -> list[float]:
        return [p for page in self.exp_pages for p in page]


def top_split(mech: Mechanism, f: FiniteDistribution) -> TopSplit:
    """Greedily move the highest prices into TOP while Pr[some TOP item is liked] <= 1/12."""
    items = [(p, t, i) for t, page in enumerate(mech.pages) for i, p in enumerate(page.prices)]
    items.sort(key=lambda x: -x[0])
    none_liked = 1.0
    top = set()
    first_out = None
    for p, t, i in items:
        nxt = none_liked * f.cdf_strict(p)
        if 1.0 - nxt > TOP_LIKE_CAP + 1e-12:
            first_out = p
            break
        none_liked = nxt
        top.add((t, i))
    exp_pages, bait_pages = [], []
    for t, page in enumerate(mech.pages):
        exp_pages.append(tuple(p for i, p in enumerate(page.prices) if (t, i) in top))
        bait_pages.append(tuple(p for i, p in enumerate(page.prices) if (t, i) not in top))
    with_bait = None if first_out is None else 1.0 - f.cdf_strict(first_out) * none_liked
    return TopSplit(
        exp_pages=tuple(exp_pages),
        bait_pages=tuple(bait_pages),
        top_bait_price=0.0 if first_out is None else first_out,
        ell=len(top),
        top_like_prob=1.0 - none_liked,
        like_prob_with_top_bait=with_bait,
    )


def survival_truncation(mech: Mechanism, f: FiniteDistribution,
                        threshold: float = SURVIVAL) -> tuple[Mechanism, int]:
    """Keep the first T pages, T the last page seen with probability >= threshold."""
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    seen = exact_revenue(mech, f).survival()
    T = 0
    for t in range(1, len(mech.pages) + 1):
        if seen[t - 1] >= threshold - 1e-12:
            T = t
    return mech.truncate(T), T


# --- brute-force oracles ---------------------------------------------------------


def enumerate_revenue(mech: Mechanism, f: FiniteDistribution) -> float:
    """Expected revenue by running the buyer on every value profile."""
    total = 0.0
    for combo in itertools.product(range(len(f.support)), repeat=mech.n_items):
        prob = math.prod(f.probs[i] for i in combo)
        total += prob * trace_revenue(mech, [f.support[i] for i in combo])
    return total


def _mech_key(mech: Mechanism, rev: float):
    return (-round(rev, 10), len(mech.pages), sum(mech.prices()))


def brute_force_optimal(f: FiniteDistribution, k: int, delta: float,
                        price_candidates: Sequence[float],
                        max_pages: int) -> tuple[Mechanism, float]:
    """Best mechanism with <= max_pages pages of <= k candidate prices, by enumeration."""
    cands = sorted(set(float(p) for p in price_candidates))
    if len(cands) ** (k * max_pages) > BRUTE_FORCE_CAP:
        raise InputError(
            f"search space {len(cands)}^({k}*{max_pages}) exceeds the cap of {BRUTE_FORCE_CAP}"
        )
    best = (Mechanism(k, delta, ()), 0.0)
    if not cands:
        return best
    layouts = [c for size in range(1, k + 1)
               for c in itertools.combinations_with_replacement(cands, size)]
    for n_pages in range(1, max_pages + 1):
        for pages in itertools.product(layouts, repeat=n_pages):
            mech = Mechanism.from_prices(k, delta, pages)
            rev = exact_revenue(mech, f).expected_revenue
            if _mech_key(mech, rev) < _mech_key(*best):
                best = (mech, rev)
    return best


# --- random instances ---------------------------------------------------------------


def random_distribution(rng: np.random.Generator, size: int | None = None,
                        lo: float = 1.0, hi: float = 100.0) -> FiniteDistribution:
    """Support of 2-4 log-uniform values in [lo, hi] (2 decimals), Dirichlet(1) probabilities."""
    n = int(rng.integers(2, 5)) if size is None else size
    while True:
        vals = np.round(np.exp(rng.uniform(math.log(lo), math.log(hi), n)), 2)
        if len(set(vals)) == n:
            break
    probs = rng.dirichlet(np.ones(n))
    probs = probs / probs.sum()
    probs[-1] = 1.0 - probs[:-1].sum()
    return FiniteDistribution(tuple(sorted(vals)), tuple(probs))


def random_price(rng: np.random.Generator, f: FiniteDistribution, delta: float) -> float:
    if rng.random() < 0.5:
        v = f.support[int(rng.integers(len(f.support)))]
        return round(max(v - int(rng.integers(0, 3)) * delta, 0.0), 9)
    return round(float(rng.uniform(0, 1.05 * f.vmax)), 2)


def random_mechanism(rng: np.random.Generator, f: FiniteDistribution, delta: float,
                     max_pages: int = 3, max_items: int = 2) -> Mechanism:
    n_pages = int(rng.integers(1, max_pages + 1))
    pages = [[random_price(rng, f, delta) for _ in range(int(rng.integers(1, max_items + 1)))]
             for _ in range(n_pages)]
    return Mechanism.from_prices(max_items, delta, pages)


def random_delta(rng: np.random.Generator, f: FiniteDistribution) -> float:
    return round(float(rng.uniform(0.02, 0.25)) * f.vmax, 2) or 0.5


def tiny_candidates(f: FiniteDistribution, delta: float, margin: float) -> list[float]:
    out = set()
    for v in f.support:
        for p in (v, v - delta, v - delta - margin):
            if p >= 0:
                out.add(round(p, 9))
    return sorted(out)


# --- the claim suite ------------------------------------------------------------------


@dataclass
class SuiteConfig:
    seed: int = 0
    umenu_instances: int = 200
    spm_instances: int = 200
    greedy_instances: int = 100
    eps_vectors: int = 10_000
    two_price_pages: int = 1000
    utility_control_instances: int = 500
    split_instances: int = 200
    upper_instances: int = 200
    uutil_instances: int = 200
    enumeration_instances: int = 100
    separation_instances: int = 20
    ratio_instances: int = 20
    skip: tuple[str, ...] = field(default_factory=tuple)


def _rng(seed: int, tag: int) -> np.random.Generator:
    return np.random.default_rng([seed, tag])


def check_umenu_half(rng, n_inst: int) -> ClaimResult:
    res = ClaimResult("umenu_half")
    for _ in range(n_inst):
        f = random_distribution(rng)
        u = {n: optimal_uniform_price(n, f)[1] for n in range(1, 65)}
        slack = min(c * u[ell] - u[c * ell] for c in range(1, 9) for ell in range(1, 9))
        res.record(slack)
    return res


def check_spm_le_2uprice(rng, n_inst: int) -> ClaimResult:
    res = ClaimResult("spm_le_2uprice")
    for _ in range(n_inst):
        f = random_distribution(rng)
        res.record(min(2 * optimal_uniform_price(n, f)[1] - optimal_spm(n, f)[1]
                       for n in range(1, 9)))
    return res


def check_greedy_eq_spm(rng, n_inst: int) -> ClaimResult:
    res = ClaimResult("greedy_eq_spm")
    for _ in range(n_inst):
        f = random_distribution(rng, size=int(rng.integers(1, 4)))
        for n in range(1, 5):
            res.record(-abs(optimal_spm(n, f)[1] - exhaustive_greedy(n, f)[1]))
    return res


def check_uspm_eq_uprice(rng, n_inst: int) -> ClaimResult:
    res = ClaimResult("uspm_eq_uprice")
    for _ in range(n_inst):
        f = random_distribution(rng)
        for n in range(1, 9):
            res.record(-abs(optimal_uspm(n, f)[1] - optimal_uniform_price(n, f)[1]))
    return res


def check_eps_to_2eps(rng, n_vec: int) -> ClaimResult:
    res = ClaimResult("eps_to_2eps")
    for _ in range(n_vec):
        eps = rng.uniform(0, 0.5, int(rng.integers(1, 21)))
        res.record(float(np.prod(1 - 2 * eps) - (2 * np.prod(1 - eps) - 1)), tol=1e-12)
    return res


def random_bracket_page(rng, f: FiniteDistribution, max_n: int = 6):
    """A random page and a bracket holding more than half of its utility mass."""
    while True:
        n = int(rng.integers(1, max_n + 1))
        prices = [random_price(rng, f, 1.0) for _ in range(n)]
        dist = page_outcome_distribution(MenuPage(tuple(prices)), f)
        atoms = sorted({o.utility for o in dist})
        mass = {u: sum(o.prob for o in dist if o.utility == u) for u in atoms}
        i = int(rng.integers(len(atoms)))
        j, acc = i, mass[atoms[i]]
        while acc <= 0.5 and j + 1 < len(atoms):
            j += 1
            acc += mass[atoms[j]]
        if acc <= 0.5:
            continue
        if rng.random() < 0.5 and j + 1 < len(atoms):
            j += 1
        lo, hi = atoms[i], atoms[j]
        if i > 0 and rng.random() < 0.5:
            lo -= rng.uniform(0, 1) * (atoms[i] - atoms[i - 1]) * 0.999
        if j + 1 < len(atoms) and rng.random() < 0.5:
            hi += rng.uniform(0, 1) * (atoms[j + 1] - atoms[j]) * 0.999
        bracket = UtilityBracket(round(lo, 9), round(hi, 9))
        if bracket_probability(prices, bracket, f) > 0.5:
            return prices, bracket


def check_baits_2_prices(rng, n_pages: int) -> ClaimResult:
    res = ClaimResult("baits_2_prices")
    for _ in range(n_pages):
        f = random_distribution(rng)
        prices, bracket = random_bracket_page(rng, f)
        eps = 1.0 - bracket_probability(prices, bracket, f)
        p_lo, p_hi, c = two_price_reduction(prices, bracket, f)
        page = [p_lo] * c + [p_hi] * (len(prices) - c)
        ok = len(page) == len(prices) and len(set(page)) <= 2 and p_lo <= p_hi
        slack = bracket_probability(page, bracket, f) - (1 - 2 * eps)
        res.record(slack if ok else -1.0, tol=1e-12)
    return res


def containment_probs(laws, alphas):
    """Exact (Pr[monotone from 0], Pr[odd containment], Pr[even containment])."""
    n = len(laws)
    mono = odd = even = 0.0
    for combo in itertools.product(*[range(len(s)) for s, _ in laws]):
        x = [laws[i][0][c] for i, c in enumerate(combo)]
        q = math.prod(laws[i][1][c] for i, c in enumerate(combo))
        if x[0] >= 0 and all(a <= b for a, b in zip(x, x[1:])):
            mono += q
        # x is 1-indexed in the statement: x_{2i+1} in [a_{2i}, a_{2i+2}], i = 0..(n-1)//2
        if all(alphas[2 * i] <= x[2 * i] <= alphas[2 * i + 2] for i in range((n - 1) // 2 + 1)):
            odd += q
        if all(alphas[2 * i - 1] <= x[2 * i - 1] <= alphas[2 * i + 1]
               for i in range(1, n // 2 + 1)):
            even += q
    return mono, odd, even


def random_laws(rng, n: int):
    laws = []
    for i in range(n):
        size = int(rng.integers(1, 4))
        vals = sorted(set(int(v) for v in rng.integers(-1, 3, size) + 2 * i))
        probs = rng.dirichlet(np.ones(len(vals)))
        laws.append((vals, list(probs / probs.sum())))
    return laws


def check_utility_control(rng, n_inst: int) -> ClaimResult:
    res = ClaimResult("utility_control")
    for _ in range(n_inst):
        laws = random_laws(rng, int(rng.integers(1, 5)))
        alphas = median_thresholds(laws)
        mono, odd, even = containment_probs(laws, alphas)
        eps = 1.0 - mono
        res.record(min(odd, even) - (1 - 2 * eps), tol=1e-12)
    return res


def check_top_split(rng, n_inst: int) -> ClaimResult:
    res = ClaimResult("eq1_sandwich")
    for _ in range(n_inst):
        f = random_distribution(rng)
        mech = random_mechanism(rng, f, random_delta(rng, f), max_pages=4, max_items=3)
        split = top_split(mech, f)
        res.record(0.0 if split.sandwich_holds else -1.0)
    return res


def check_upper_one_time(rng, n_inst: int) -> ClaimResult:
    res = ClaimResult("upper_one_time")
    for _ in range(n_inst):
        f = random_distribution(rng, size=2)
        mech = random_mechanism(rng, f, random_delta(rng, f), max_pages=3, max_items=2)
        mech_t, _ = survival_truncation(mech, f)
        split = top_split(mech_t, f)
        bound = greedy_revenue(split.expensive_prices(), f) + split.top_bait_price
        res.record(bound - exact_revenue(mech_t, f).expected_revenue)
    return res


def check_uutil_T(rng, n_inst: int) -> ClaimResult:
    res = ClaimResult("uutil_T")
    for _ in range(n_inst):
        f = random_distribution(rng)
        k = int(rng.integers(1, 5))
        prices = [random_price(rng, f, 1.0) for _ in range(int(rng.integers(1, k + 1)))]
        dist = page_outcome_distribution(MenuPage(tuple(prices)), f)
        atoms = sorted({o.utility for o in dist}, reverse=True)
        # largest w with Pr[u >= w] >= 2/3 plays the role of hi + delta
        tail, w = 0.0, None
        for u in atoms:
            tail += sum(o.prob for o in dist if o.utility == u)
            if tail >= 2 / 3 - 1e-12:
                w = u
                break
        res.record(1.5 * optimal_uniform_price(k, f)[1] - w)
    return res


def check_survival_truncation(rng, n_inst: int) -> ClaimResult:
    res = ClaimResult("survival_truncation")
    for _ in range(n_inst):
        f = random_distribution(rng)
        mech = random_mechanism(rng, f, random_delta(rng, f), max_pages=5, max_items=2)
        seen = exact_revenue(mech, f).survival()
        _, T = survival_truncation(mech, f)
        ok = seen[T - 1] >= SURVIVAL - 1e-12 and (T == len(mech.pages) or seen[T] < SURVIVAL)
        res.record(0.0 if ok else -1.0)
    return res


def check_enumeration(rng, n_inst: int) -> ClaimResult:
    res = ClaimResult("exact_eq_enumeration")
    for _ in range(n_inst):
        f = random_distribution(rng, size=2)
        mech = random_mechanism(rng, f, random_delta(rng, f), max_pages=4, max_items=2)
        res.record(-abs(exact_revenue(mech, f).expected_revenue - enumerate_revenue(mech, f)))
    return res


def check_bait_separation(rng, n_inst: int) -> ClaimResult:
    """Bait-only pages are seen through with probability >= the skeleton's success probability."""
    res = ClaimResult("bait_separation")
    for _ in range(n_inst):
        f = random_distribution(rng)
        delta = random_delta(rng, f)
        k = int(rng.integers(1, 4))
        for skel in synthesize_bait_dp(f, k, delta):
            mech = skel.bait_mechanism()
            through = exact_revenue(mech, f).survival()[-1]
            prod = math.prod(p.prob for p in skel.pages)
            two_prices = all(len(set(p.prices)) <= 2 for p in skel.pages)
            brackets_chain = all(
                abs(b.bracket.lower - (a.bracket.upper + delta)) < 1e-9
                for a, b in zip(skel.pages, skel.pages[1:])
            ) and abs(skel.pages[0].bracket.lower - delta) < 1e-9
            ok = two_prices and brackets_chain and not validate(mech, f)
            ok = ok and abs(prod - skel.success_prob) < 1e-9
            res.record(through - skel.success_prob if ok else -1.0, tol=1e-12)
    return res


def ratio_instance(rng):
    f = random_distribution(rng, size=2)
    delta = random_delta(rng, f)
    return f, 2, delta, delta / 10


def check_ratio(rng, n_inst: int, k: int = 2, max_pages: int = 2) -> ClaimResult:
    res = ClaimResult("synthesis_ratio")
    ratios = []
    for _ in range(n_inst):
        f, k, delta, margin = ratio_instance(rng)
        _, opt = brute_force_optimal(f, k, delta, tiny_candidates(f, delta, margin), max_pages)
        mech, rep = synthesize(f, k, delta, m=k * max_pages, grid_step=delta, margin=margin)
        ratio = rep.expected_revenue / opt if opt > 0 else 1.0
        ratios.append(ratio)
        res.record(ratio - RATIO_FLOOR)
        if ratio < RATIO_FLAG:
            res.flagged += 1
    res.note = f"min ratio {min(ratios):.4f}" if ratios else ""
    return res


CHECKS: dict[str, tuple[Callable, str]] = {
    "umenu_half": (check_umenu_half, "umenu_instances"),
    "spm_le_2uprice": (check_spm_le_2uprice, "spm_instances"),
    "greedy_eq_spm": (check_greedy_eq_spm, "greedy_instances"),
    "uspm_eq_uprice": (check_uspm_eq_uprice, "spm_instances"),
    "eps_to_2eps": (check_eps_to_2eps, "eps_vectors"),
    "baits_2_prices": (check_baits_2_prices, "two_price_pages"),
    "utility_control": (check_utility_control, "utility_control_instances"),
    "eq1_sandwich": (check_top_split, "split_instances"),
    "upper_one_time": (check_upper_one_time, "upper_instances"),
    "uutil_T": (check_uutil_T, "uutil_instances"),
    "survival_truncation": (check_survival_truncation, "split_instances"),
    "exact_eq_enumeration": (check_enumeration, "enumeration_instances"),
    "bait_separation": (check_bait_separation, "separation_instances"),
    "synthesis_ratio": (check_ratio, "ratio_instances"),
}


def run_claim_suite(config: SuiteConfig | None = None) -> list[ClaimResult]:
    config = config or SuiteConfig()
    out = []
    for tag, (name, (fn, count_attr)) in enumerate(CHECKS.items()):
        if name in config.skip:
            continue
        out.append(fn(_rng(config.seed, tag), getattr(config, count_attr)))
    return out
