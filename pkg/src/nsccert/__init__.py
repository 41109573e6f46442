"""Null space condition certification for l1 sparse recovery.

Certify, for a dense sensing matrix A and sparsity k, whether every
k-sparse signal is the unique l1-minimizing solution consistent with its
measurements.  The condition is equivalent to the proportion value
alpha_k (the largest fraction of l1 mass a null-space vector can place on
k coordinates) being below 1/2.  The package computes alpha_k exactly by
best-first tree search or exhaustive enumeration, and bounds it in
polynomial time with the pick-l family.
"""
from .matrices import (
    IndexSet,
    MatrixFormatError,
    SensingMatrix,
    gen_gaussian,
    gen_partial_fourier,
    load_matrix,
    permute_columns_desc,
    save_matrix,
)
from .lp import LpError, LpProblem, LpSolution, LpStatus, PreparedLp, solve_lp
from .alpha import (
    SubsetEvaluator,
    SubsetScore,
    alpha_column_dual,
    alpha_subset,
    enumerate_subsets,
    score_all_subsets,
)
from .bounds import (
    BoundReport,
    ConstraintBudgetError,
    IncompleteScoresError,
    NscDecision,
    cub,
    kmax_lower_bound,
    lp_baseline_alpha,
    nsc_certify,
    optimized_pick_l,
    pick_l_upper_bound,
    pick_l_upper_bound_lp,
)
from .exhaustive import EsmBudgetError, EsmResult, esm_alpha
from .tree_search import (
    SearchNode,
    StopReason,
    TailBounds,
    TsaResult,
    bound_child,
    bound_node,
    tsa,
    tsa_bound_report,
    write_trace_csv,
)
from .tomography import (
    DisconnectedGraphError,
    NetworkInstance,
    build_random_walk_instance,
    complete_graph,
    load_edge_list,
    save_edge_list,
    tree_plus_random_edges,
    wilson_spanning_tree,
)

__version__ = "0.1.0"
