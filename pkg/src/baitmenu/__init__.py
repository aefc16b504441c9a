"""Paged posted-price menus for an impatient unit-demand buyer."""

from .buyer import BuyerTrace, revenue, simulate
from .core import (
    BAIT,
    EXPENSIVE,
    FiniteDistribution,
    InputError,
    Mechanism,
    MenuPage,
    PurchaseOutcome,
    load_distribution,
    load_mechanism,
    sample_profile,
    validate,
)
from .evaluator import (
    MonteCarloEstimate,
    RevenueReport,
    exact_revenue,
    monte_carlo_revenue,
    page_outcome_distribution,
)
from .oracles import (
    greedy_revenue,
    optimal_spm,
    optimal_uniform_price,
    optimal_uspm,
    spm_revenue,
    uniform_price_revenue,
)
from .synthesis import (
    BaitSkeleton,
    UtilityBracket,
    attach_expensive,
    bracket_probability,
    spreading_coefficient,
    synthesize,
    synthesize_bait_dp,
    two_price_reduction,
)
from .verification import ClaimResult, SuiteConfig, brute_force_optimal, run_claim_suite

__version__ = "0.1.0"

__all__ = [
    "BAIT", "EXPENSIVE", "BaitSkeleton", "BuyerTrace", "ClaimResult", "FiniteDistribution",
    "InputError", "Mechanism", "MenuPage", "MonteCarloEstimate", "PurchaseOutcome",
    "RevenueReport", "SuiteConfig", "UtilityBracket", "attach_expensive", "bracket_probability",
    "brute_force_optimal", "exact_revenue", "greedy_revenue", "load_distribution",
    "load_mechanism", "monte_carlo_revenue", "optimal_spm", "optimal_uniform_price",
    "optimal_uspm", "page_outcome_distribution", "revenue", "run_claim_suite", "sample_profile",
    "simulate", "spm_revenue", "spreading_coefficient", "synthesize", "synthesize_bait_dp",
    "two_price_reduction", "uniform_price_revenue", "validate",
]
