"""Dyadic Haar machinery, interval swaps, spectrum spreading and ideal-norm estimation."""

__version__ = "0.1.0"

from .dyadic import DyadicInterval, DyadicRational, HaarIndex, TreeRange, children, interval, tree
from .haar import (HaarExpansion, StepFunction, analyze, conditional_expectation, haar_eval, l2x_norm,
                   spectrum, synthesize)
from .kernels import BACKEND
from .norms import (Budget, Estimator, NormEstimate, estimate_norm, max_ratio_over_tuples,
                    transform_ratio, verify_chain, verify_prop1, verify_prop2)
from .selfsim import (check_blockwise, check_rescaling, check_upper_bound_factor2, pull_back, reindex,
                      split_lower_upper, subtree_indices)
from .signs import SignPattern, free_patterns, level_patterns
from .spaces import NormedSpace, Operator, parse_space, spectral_norm
from .spreading import ConstructionError, build_psi1, build_psi2, extract_delta, reduce_to_alternating
from .swaps import (CellPermutation, IntervalSwap, PreconditionError, check_main_property, compose,
                    haar_action, pushforward, swap)

__all__ = [
    "BACKEND", "Budget", "CellPermutation", "ConstructionError", "DyadicInterval", "DyadicRational",
    "Estimator", "HaarExpansion", "HaarIndex", "IntervalSwap", "NormEstimate", "NormedSpace", "Operator",
    "PreconditionError", "SignPattern", "StepFunction", "TreeRange", "analyze", "build_psi1", "build_psi2",
    "check_blockwise", "check_main_property", "check_rescaling", "check_upper_bound_factor2", "children",
    "compose", "conditional_expectation", "estimate_norm", "extract_delta", "free_patterns", "haar_action",
    "haar_eval", "interval", "l2x_norm", "level_patterns", "max_ratio_over_tuples", "parse_space",
    "pull_back", "pushforward", "reduce_to_alternating", "reindex", "spectral_norm", "spectrum",
    "split_lower_upper", "subtree_indices", "swap", "synthesize", "transform_ratio", "tree",
    "verify_chain", "verify_prop1", "verify_prop2",
]
