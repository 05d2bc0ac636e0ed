"""Weighted solution counts of real linear inequality systems and Gowers-norm diagnostics."""
from .approximation import ApproxQuery, ApproxResult, algebraic_decay_probe, approx_lower, approx_upper, approximate
from .constructions import (
    BlockConstruction,
    DegeneracyDirection,
    bad_behaviour_system,
    build_case2,
    build_case3,
    converse_verdict,
    detect_direction,
    pair_weights,
)
from .counting import CountResult, count_brute, count_fast, count_generalized, enumerate_solutions
from .cutoffs import BoxCutoff, CutoffSpec, LipschitzBox, LipschitzTent, PolytopeCutoff, SharpBox, build_lipschitz_cutoffs
from .errors import *  # noqa: F401,F403
from .exact_reals import ConstantBasis, ExactScalar, parse_scalar, sqrt_const
from .experiments import ExperimentConfig, run_experiment
from .gowers import balanced_function, fourier_sup, gowers_cyclic, gowers_inner_product, gowers_interval
from .linear_systems import LinearSystem, classify, rank_matrix, rational_structure
from .normal_form import FormSystem, cs_complexity, extend_normal_form, is_normal_form
from .reduction import ReductionBundle, reduce, verify_decomposition
from .sieve import SieveTable, sieve
from .weights import WeightFunction

__version__ = "0.1.0"
