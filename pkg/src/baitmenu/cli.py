"""Command-line front end.

Subcommands: eval, mc, synthesize, oracles, verify, example.
Exit codes: 0 success, 1 input error, 2 claim-suite violation.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .core import FiniteDistribution, InputError, Mechanism, dump_json, load_distribution, \
    load_mechanism, validate
from .evaluator import exact_revenue, monte_carlo_revenue
from .oracles import (
    exhaustive_greedy,
    greedy_revenue,
    optimal_spm,
    optimal_uniform_price,
    optimal_uspm,
)
from .synthesis import synthesize_candidates
from .verification import SuiteConfig, run_claim_suite

SEED_ENV = "BAITMENU_SEED"
CANDIDATE_FIELDS = ("mechanism_id", "pages", "revenue", "sale_prob", "expensive_sale_prob")

EXIT_OK, EXIT_INPUT, EXIT_CLAIMS = 0, 1, 2

EXAMPLE_PRIOR = FiniteDistribution((10.0, 100.0), (0.9, 0.1))
UNIFORM_MENU = Mechanism.from_prices(2, 1.0, [[9, 9], [98.9, 98.9]])
# bait 10 - t next to an expensive item at 98.9 - t on page t = 1..10
STAIRCASE_MENU = Mechanism.from_prices(
    2, 1.0, [[10 - t, round(98.9 - t, 9)] for t in range(1, 11)])
PUBLISHED = (("uniform_menu", UNIFORM_MENU, "22.8"), ("staircase_menu", STAIRCASE_MENU, "38.3133"))


@dataclass
class RunConfig:
    subcommand: str
    inputs: list[Path] = field(default_factory=list)
    seed: int = 0
    samples: int | None = None
    grid_step: float | None = None
    margin: float | None = None
    out_dir: Path | None = None

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        seed = getattr(args, "seed", None)
        cfg = cls(
            subcommand=args.command,
            inputs=[getattr(args, n) for n in ("mechanism", "distribution") if hasattr(args, n)],
            seed=_default_seed() if seed is None else seed,
            samples=getattr(args, "samples", None),
            grid_step=getattr(args, "grid_step", None),
            margin=getattr(args, "margin", None),
            out_dir=getattr(args, "out", None),
        )
        for path in cfg.inputs:
            if not path.is_file():
                raise InputError(f"{path}: no such file")
        return cfg


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"{SEED_ENV}={raw!r} is not an integer") from None


def _supply(text: str) -> float:
    if text.lower() in ("inf", "infinity", "unbounded"):
        return math.inf
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"supply must be an integer or 'inf' (got {text!r})")
    if value < 0:
        raise argparse.ArgumentTypeError("supply must be >= 0")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="baitmenu", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="exact expected revenue of a mechanism")
    p.add_argument("mechanism", type=Path)
    p.add_argument("distribution", type=Path)
    p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("mc", help="Monte Carlo revenue estimate")
    p.add_argument("mechanism", type=Path)
    p.add_argument("distribution", type=Path)
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--chunk-size", type=int, default=1 << 17)
    p.add_argument("--json", action="store_true", help="print the estimate as JSON")

    p = sub.add_parser("synthesize", help="search bait mechanisms and write the winner")
    p.add_argument("distribution", type=Path)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--supply", type=_supply, default=math.inf)
    p.add_argument("--grid-step", type=float, default=None)
    p.add_argument("--margin", type=float, default=None)
    p.add_argument("--out", type=Path, default=Path("."))

    p = sub.add_parser("oracles", help="uniform pricing / SPM / greedy table")
    p.add_argument("distribution", type=Path)
    p.add_argument("--n", type=int, default=8)

    p = sub.add_parser("verify", help="run the claim suite")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--quick", action="store_true", help="one tenth of the default instance counts")

    sub.add_parser("example", help="revenues of the two worked-example mechanisms")
    return parser


def _write_csv(rows, fields, stream) -> None:
    writer = csv.DictWriter(stream, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)


def _load_checked(mech_path: Path, dist_path: Path):
    mech = load_mechanism(mech_path)
    f = load_distribution(dist_path)
    problems = validate(mech, f)
    if problems:
        raise InputError(f"{mech_path}: " + "; ".join(problems))
    return mech, f


def cmd_eval(args, out) -> int:
    mech, f = _load_checked(args.mechanism, args.distribution)
    report = exact_revenue(mech, f)
    if args.format == "csv":
        _write_csv([report.csv_row()], report.CSV_FIELDS, out)
    else:
        out.write(json.dumps(report.to_dict(), indent=2) + "\n")
    return EXIT_OK


def cmd_mc(args, out) -> int:
    mech, f = _load_checked(args.mechanism, args.distribution)
    if args.samples < 1:
        raise InputError("--samples must be >= 1")
    if args.chunk_size < 1:
        raise InputError("--chunk-size must be >= 1")
    est = monte_carlo_revenue(mech, f, args.samples, args.seed, chunk_size=args.chunk_size)
    if args.json:
        out.write(json.dumps(est.to_dict()) + "\n")
    else:
        out.write(f"{est.mean:.6f} ± {est.stderr:.6f} "
                  f"(samples={est.samples}, seed={est.seed})\n")
    return EXIT_OK


def cmd_synthesize(args, out) -> int:
    f = load_distribution(args.distribution)
    if args.k < 1 or args.delta <= 0:
        raise InputError("--k must be >= 1 and --delta > 0")
    grid_step = args.grid_step if args.grid_step is not None else args.delta
    margin = args.margin if args.margin is not None else args.delta / 10
    if grid_step <= 0 or not 0 < margin < args.delta:
        raise InputError("--grid-step must be > 0 and --margin in (0, delta)")
    cands = synthesize_candidates(f, args.k, args.delta, args.supply, grid_step, margin)
    args.out.mkdir(parents=True, exist_ok=True)
    best = cands[0]
    mech_path = args.out / "mechanism.json"
    csv_path = args.out / "candidates.csv"
    dump_json(best.mechanism.to_dict(), mech_path)
    rows = []
    for i, c in enumerate(cands):
        rows.append({
            "mechanism_id": f"{c.family}-{i:04d}",
            "pages": json.dumps(c.mechanism.price_lists(), separators=(",", ":")),
            "revenue": f"{c.revenue:.10g}",
            "sale_prob": f"{c.report.sale_prob:.10g}",
            "expensive_sale_prob": "" if c.report.expensive_sale_prob is None
            else f"{c.report.expensive_sale_prob:.10g}",
        })
    with csv_path.open("w", newline="") as fh:
        _write_csv(rows, CANDIDATE_FIELDS, fh)
    summary = {
        "revenue": best.revenue,
        "family": best.family,
        "pages": len(best.mechanism.pages),
        "candidates": len(cands),
        "mechanism_json": str(mech_path),
        "candidates_csv": str(csv_path),
    }
    out.write(json.dumps(summary, indent=2) + "\n")
    return EXIT_OK


def cmd_oracles(args, out) -> int:
    f = load_distribution(args.distribution)
    if args.n < 1:
        raise InputError("--n must be >= 1")
    rows = []
    for n in range(1, args.n + 1):
        u_price, u_rev = optimal_uniform_price(n, f)
        _, uspm = optimal_uspm(n, f)
        spm_prices, spm = optimal_spm(n, f)
        greedy = greedy_revenue(spm_prices, f)
        if math.comb(len(f.support) + n - 1, n) <= 100_000:
            exhaustive = exhaustive_greedy(n, f)[1]
            greedy_eq = abs(exhaustive - spm) <= 1e-9
        else:
            exhaustive, greedy_eq = float("nan"), ""
        rows.append({
            "n": n,
            "uprice_price": f"{u_price:.10g}",
            "uprice": f"{u_rev:.10g}",
            "uspm": f"{uspm:.10g}",
            "spm": f"{spm:.10g}",
            "spm_prices": ";".join(f"{p:.10g}" for p in spm_prices),
            "greedy_of_spm_prices": f"{greedy:.10g}",
            "greedy_exhaustive": f"{exhaustive:.10g}",
            "greedy_eq_spm": greedy_eq,
            "spm_le_2uprice": spm <= 2 * u_rev + 1e-9,
        })
    _write_csv(rows, list(rows[0]), out)
    return EXIT_OK


def cmd_verify(args, out) -> int:
    cfg = SuiteConfig(seed=args.seed)
    if args.quick:
        for name in ("umenu_instances", "spm_instances", "greedy_instances", "eps_vectors",
                     "two_price_pages", "utility_control_instances", "split_instances",
                     "upper_instances", "uutil_instances", "enumeration_instances"):
            setattr(cfg, name, max(1, getattr(cfg, name) // 10))
        cfg.separation_instances = 4
        cfg.ratio_instances = 4
    results = run_claim_suite(cfg)
    _write_csv([r.csv_row() for r in results], results[0].CSV_FIELDS, out)
    return EXIT_OK if all(r.passed for r in results) else EXIT_CLAIMS


def cmd_example(args, out) -> int:
    rows = []
    for name, mech, published in PUBLISHED:
        rep = exact_revenue(mech, EXAMPLE_PRIOR)
        rows.append({
            "mechanism": name,
            "pages": json.dumps(mech.price_lists(), separators=(",", ":")),
            "exact_revenue": f"{rep.expected_revenue:.4f}",
            "published_revenue": published,
        })
    _write_csv(rows, list(rows[0]), out)
    return EXIT_OK


COMMANDS = {
    "eval": cmd_eval,
    "mc": cmd_mc,
    "synthesize": cmd_synthesize,
    "oracles": cmd_oracles,
    "verify": cmd_verify,
    "example": cmd_example,
}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = RunConfig.from_args(args)
        if hasattr(args, "seed"):
            args.seed = cfg.seed
        return COMMANDS[cfg.subcommand](args, out)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def run(argv) -> tuple[int, str]:
    """Run the CLI in-process and capture stdout (used by the tests)."""
    buf = io.StringIO()
    code = main(argv, out=buf)
    return code, buf.getvalue()


if __name__ == "__main__":
    sys.exit(main())
