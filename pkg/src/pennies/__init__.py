"""Regularity detectors, a universal machine, and a Matching Pennies arena."""

__version__ = "0.1.0"

from .arena import make_strategy, run_match, tournament
from .bank import BANK_NAMES, bank, get_detector
from .bits import BitString, DecodeError, concat, is_prefix, pair, unpair
from .detectors import (
    SIGNIFICANCE_THRESHOLD,
    Budget,
    BudgetExceeded,
    Detector,
    RegularityReport,
    SignificanceVerdict,
    check_expansion,
    enumerate_level_set,
    sigma_exact,
    sigma_lower_bound,
    test_significance,
)
from .distributions import (
    PDetector,
    make_distribution,
    p_level_set_mass,
    p_sigma_exact,
)
from .rng import SplitMix64
from .universal import (
    Frontier,
    UniversalReport,
    compile_bank_detector,
    domination_constant,
    dovetail_sigma,
    universal_detector,
    vm_detector,
)

__all__ = [
    "BANK_NAMES",
    "BitString",
    "Budget",
    "BudgetExceeded",
    "DecodeError",
    "Detector",
    "Frontier",
    "PDetector",
    "RegularityReport",
    "SIGNIFICANCE_THRESHOLD",
    "SignificanceVerdict",
    "SplitMix64",
    "UniversalReport",
    "bank",
    "check_expansion",
    "compile_bank_detector",
    "concat",
    "domination_constant",
    "dovetail_sigma",
    "enumerate_level_set",
    "get_detector",
    "is_prefix",
    "make_distribution",
    "make_strategy",
    "p_level_set_mass",
    "p_sigma_exact",
    "pair",
    "run_match",
    "sigma_exact",
    "sigma_lower_bound",
    "test_significance",
    "tournament",
    "universal_detector",
    "unpair",
    "vm_detector",
]
