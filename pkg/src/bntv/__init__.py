"""Estimate total variation distance between discrete Bayes nets over a shared DAG."""

__version__ = "0.1.0"

from .coupling import CouplingNet, build_coupling, coupling_row, pair_decode, pair_encode
from .errors import BNInputError, BudgetExceededError, ContractViolation, ParseError
from .estimator import (
    EstimateParams,
    EstimateReport,
    compute_Z,
    compute_Z_prefix,
    estimate_tv,
    estimate_tv_uniform,
    f_value,
    g_value,
    h_term,
    sample_count,
    sample_pi,
)
from .inference import Factor, InferenceOracle, QuerySets, infer, multiply, restrict, sum_out
from .model import (
    BayesNet,
    Cpt,
    Dag,
    UndirectedGraph,
    conditional,
    gen_random_net,
    mass,
    moralize,
    validate,
)
from .netio import parse_net, serialize_net
from .oracle import exact_identity_check, exact_infer, exact_prefix_Z, exact_tv, exact_Z
from .treedecomp import TreeDecomposition, decompose, elimination_order, verify_decomposition
