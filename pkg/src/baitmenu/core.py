"""Domain types: value distributions, menu pages, mechanisms, and their JSON form."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

TOL = 1e-9
NEG_INF = float("-inf")

BAIT = "bait"
EXPENSIVE = "expensive"
LABELS = (BAIT, EXPENSIVE)
# tie-break rank among equally priced offers: expensive > bait > unlabelled
LABEL_RANK = {None: 0, BAIT: 1, EXPENSIVE: 2}


def canon(x: float) -> float:
    """Snap a money amount onto the 1e-9 grid (keeps -inf as is)."""
    if x == NEG_INF:
        return x
    return float(np.round(x, 9))


def utility(value: float, price: float) -> float:
    return canon(value - price)


def continues(u: float, prev: float, delta: float) -> bool:
    """Buyer advances iff the page utility improved by at least ``delta``."""
    return u >= prev + delta - TOL


class InputError(ValueError):
    """Malformed user input (file, field, or argument)."""


@dataclass(frozen=True)
class FiniteDistribution:
    support: tuple[float, ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "support", tuple(float(s) for s in self.support))
        object.__setattr__(self, "probs", tuple(float(p) for p in self.probs))
        problems = self.violations()
        if problems:
            raise InputError("; ".join(problems))
        cum = np.cumsum(self.probs)
        cum[-1] = 1.0
        object.__setattr__(self, "_cum", cum)

    def violations(self) -> list[str]:
        out = []
        s, p = self.support, self.probs
        if len(s) == 0:
            out.append("support: must be nonempty")
        if len(s) != len(p):
            out.append("probs: length must equal support length")
            return out
        if any(not math.isfinite(v) or v < 0 for v in s):
            out.append("support: values must be finite and >= 0")
        if any(b <= a for a, b in zip(s, s[1:])):
            out.append("support: must be strictly ascending")
        if any(not (q > 0) for q in p):
            out.append("probs: every probability must be > 0")
        if p and abs(sum(p) - 1.0) > 1e-12:
            out.append(f"probs: must sum to 1 (got {sum(p)!r})")
        return out

    @classmethod
    def point_mass(cls, c: float) -> "FiniteDistribution":
        return cls((c,), (1.0,))

    @classmethod
    def from_dict(cls, d: dict) -> "FiniteDistribution":
        for key in ("support", "probs"):
            if key not in d:
                raise InputError(f"distribution: missing field '{key}'")
        return cls(tuple(d["support"]), tuple(d["probs"]))

    def to_dict(self) -> dict:
        return {"support": list(self.support), "probs": list(self.probs)}

    @property
    def vmax(self) -> float:
        return self.support[-1]

    @property
    def vmin(self) -> float:
        return self.support[0]

    def cdf(self, p: float) -> float:
        """Pr[v <= p]."""
        i = int(np.searchsorted(self.support, p, side="right"))
        return float(self._cum[i - 1]) if i > 0 else 0.0

    def cdf_strict(self, p: float) -> float:
        """Pr[v < p]."""
        i = int(np.searchsorted(self.support, p, side="left"))
        return float(self._cum[i - 1]) if i > 0 else 0.0

    def sf(self, p: float) -> float:
        """Pr[v >= p]."""
        return 1.0 - self.cdf_strict(p)

    def mean(self) -> float:
        return float(np.dot(self.support, self.probs))

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        idx = np.searchsorted(self._cum, rng.random(size), side="right")
        return np.asarray(self.support)[np.minimum(idx, len(self.support) - 1)]


@dataclass(frozen=True)
class MenuPage:
    prices: tuple[float, ...]
    labels: tuple[str | None, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "prices", tuple(float(p) for p in self.prices))
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(self.labels))

    def __len__(self) -> int:
        return len(self.prices)

    def label(self, i: int) -> str | None:
        return None if self.labels is None else self.labels[i]

    def offers(self) -> list[tuple[float, str | None]]:
        return [(p, self.label(i)) for i, p in enumerate(self.prices)]


@dataclass(frozen=True)
class Mechanism:
    """A finite sequence of menu pages; after the last page the buyer sees an empty page."""

    k: int
    delta: float
    pages: tuple[MenuPage, ...] = ()
    supply: float = math.inf

    def __post_init__(self):
        pages = tuple(p if isinstance(p, MenuPage) else MenuPage(tuple(p)) for p in self.pages)
        object.__setattr__(self, "pages", pages)
        object.__setattr__(self, "delta", float(self.delta))

    @classmethod
    def from_prices(cls, k, delta, pages: Iterable[Sequence[float]], supply=math.inf,
                    labels: Iterable[Sequence[str | None]] | None = None) -> "Mechanism":
        pages = [tuple(p) for p in pages]
        if labels is None:
            built = tuple(MenuPage(p) for p in pages)
        else:
            built = tuple(MenuPage(p, tuple(lb)) for p, lb in zip(pages, labels, strict=True))
        return cls(k=k, delta=delta, pages=built, supply=supply)

    @property
    def n_items(self) -> int:
        return sum(len(p) for p in self.pages)

    @property
    def has_labels(self) -> bool:
        return any(p.labels is not None for p in self.pages)

    def prices(self) -> list[float]:
        return [x for p in self.pages for x in p.prices]

    def price_lists(self) -> list[list[float]]:
        return [list(p.prices) for p in self.pages]

    def truncate(self, n_pages: int) -> "Mechanism":
        return Mechanism(self.k, self.delta, self.pages[:n_pages], self.supply)

    def to_dict(self) -> dict:
        d = {
            "k": self.k,
            "delta": self.delta,
            "supply": "inf" if math.isinf(self.supply) else int(self.supply),
            "pages": self.price_lists(),
        }
        if self.has_labels:
            d["labels"] = [
                list(p.labels) if p.labels is not None else [None] * len(p) for p in self.pages
            ]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Mechanism":
        for key in ("k", "delta", "pages"):
            if key not in d:
                raise InputError(f"mechanism: missing field '{key}'")
        supply = d.get("supply", "inf")
        if supply == "inf" or supply is None:
            supply = math.inf
        elif isinstance(supply, bool) or not isinstance(supply, int):
            raise InputError("mechanism: field 'supply' must be an integer or \"inf\"")
        if not isinstance(d["k"], int) or isinstance(d["k"], bool):
            raise InputError("mechanism: field 'k' must be an integer")
        if not isinstance(d["delta"], (int, float)) or isinstance(d["delta"], bool):
            raise InputError("mechanism: field 'delta' must be a number")
        pages = d["pages"]
        if not isinstance(pages, list) or any(not isinstance(p, list) for p in pages):
            raise InputError("mechanism: field 'pages' must be a list of lists")
        for t, page in enumerate(pages):
            for x in page:
                if isinstance(x, bool) or not isinstance(x, (int, float)):
                    raise InputError(f"mechanism: pages[{t}] holds a non-numeric price {x!r}")
        labels = d.get("labels")
        if labels is not None:
            if len(labels) != len(pages) or any(len(a) != len(b) for a, b in zip(labels, pages)):
                raise InputError("mechanism: field 'labels' must mirror the shape of 'pages'")
            for row in labels:
                for lb in row:
                    if lb is not None and lb not in LABELS:
                        raise InputError(f"mechanism: unknown label {lb!r} in 'labels'")
        return cls.from_prices(d["k"], d["delta"], pages, supply=supply, labels=labels)


@dataclass(frozen=True)
class PurchaseOutcome:
    stop_page: int
    bought_price: float | None
    buyer_utility: float
    bought_label: str | None = None


def validate(mech: Mechanism, f: FiniteDistribution | None = None) -> list[str]:
    """Return a list of human-readable rule violations (empty when valid)."""
    out = []
    if not isinstance(mech.k, int) or mech.k < 1:
        out.append(f"k: page capacity must be a positive integer (got {mech.k!r})")
    if not (math.isfinite(mech.delta) and mech.delta > 0):
        out.append(f"delta: search cost must be > 0 (got {mech.delta!r})")
    if not (mech.supply == math.inf or (mech.supply >= 0 and float(mech.supply).is_integer())):
        out.append(f"supply: must be a nonnegative integer or unbounded (got {mech.supply!r})")
    for t, page in enumerate(mech.pages, start=1):
        if isinstance(mech.k, int) and len(page) > mech.k:
            out.append(f"pages[{t}]: page capacity exceeded ({len(page)} prices > k={mech.k})")
        if any(not math.isfinite(p) or p < 0 for p in page.prices):
            out.append(f"pages[{t}]: prices must be finite and >= 0")
        if page.labels is not None:
            if len(page.labels) != len(page.prices):
                out.append(f"pages[{t}]: labels length differs from prices length")
            elif any(lb is not None and lb not in LABELS for lb in page.labels):
                out.append(f"pages[{t}]: labels must be 'bait' or 'expensive'")
    if math.isfinite(mech.supply) and mech.n_items > mech.supply:
        out.append(f"supply: {mech.n_items} prices offered but supply m={int(mech.supply)}")
    if f is not None:
        out.extend(f"distribution {v}" for v in f.violations())
    return out


def sample_profile(mech: Mechanism, f: FiniteDistribution, seed: int) -> tuple[float, ...]:
    """Draw one i.i.d. value per offered item, in page order then within-page order."""
    rng = np.random.default_rng(seed)
    return tuple(float(v) for v in f.sample(rng, mech.n_items))


def load_json(path: str | Path) -> dict:
    path = Path(path)
    try:
        with path.open() as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: malformed JSON ({exc})") from exc
    except OSError as exc:
        raise InputError(f"{path}: cannot read ({exc.strerror})") from exc


def load_distribution(path: str | Path) -> FiniteDistribution:
    try:
        return FiniteDistribution.from_dict(load_json(path))
    except InputError as exc:
        raise InputError(f"{path}: {exc}") from exc
    except (TypeError, AttributeError) as exc:
        raise InputError(f"{path}: distribution fields have the wrong type ({exc})") from exc


def load_mechanism(path: str | Path) -> Mechanism:
    try:
        return Mechanism.from_dict(load_json(path))
    except InputError as exc:
        raise InputError(f"{path}: {exc}") from exc
    except (TypeError, AttributeError) as exc:
        raise InputError(f"{path}: mechanism fields have the wrong type ({exc})") from exc


def dump_json(obj: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2) + "\n")
