"""Differential testing of quantum pass pipelines via dead-code variants."""

from .checker import budget, compare_errors, early_stop_compare, hellinger, speedup_ratio
from .emi import check_equivalence_exact, derive_variant
from .generator import GenConfig, generate
from .harness import BugReport, CampaignConfig, reproduce, run_campaign
from .ir import Program, deserialize, serialize, validate
from .passes import CORRECT_PASSES, SEEDED_BUG_PASSES, Pipeline, apply
from .simulator import Counts, EnumCaps, ExecOutcome, enumerate_distribution, run

__version__ = "0.1.0"

__all__ = [
    "BugReport",
    "CORRECT_PASSES",
    "CampaignConfig",
    "Counts",
    "EnumCaps",
    "ExecOutcome",
    "GenConfig",
    "Pipeline",
    "Program",
    "SEEDED_BUG_PASSES",
    "apply",
    "budget",
    "check_equivalence_exact",
    "compare_errors",
    "derive_variant",
    "deserialize",
    "early_stop_compare",
    "enumerate_distribution",
    "generate",
    "hellinger",
    "reproduce",
    "run",
    "run_campaign",
    "serialize",
    "speedup_ratio",
    "validate",
]
