"""Brane-decorated graph calculus for deformation quantization."""

from .graphs import AdmGraph, EdgeKind, KindSet, Scheme, admissible, canonical_key, enumerate_graphs
from .operators import DeformedProduct, check_assumption, fn_F, lift, membership, mod_product_left, \
    mod_product_right, op_A, star
from .poisson import Brane, PoissonStructure, VectorFieldPoly, check_coisotropic, is_poisson, jacobiator
from .polyalg import EpsSeries, MultiDiffOp, Poly
from .verify import SUITES, SuiteConfig, run_suite
from .weights import MissingWeightsError, WeightCache, WeightProvider, weight_mc

__version__ = "0.1.0"

__all__ = [
    "AdmGraph", "Brane", "DeformedProduct", "EdgeKind", "EpsSeries", "KindSet", "MissingWeightsError",
    "MultiDiffOp", "PoissonStructure", "Poly", "SUITES", "Scheme", "SuiteConfig", "VectorFieldPoly", "WeightCache",
    "WeightProvider", "admissible", "canonical_key", "check_assumption", "check_coisotropic", "enumerate_graphs",
    "fn_F", "is_poisson", "jacobiator", "lift", "membership", "mod_product_left", "mod_product_right", "op_A",
    "run_suite", "star", "weight_mc",
]
