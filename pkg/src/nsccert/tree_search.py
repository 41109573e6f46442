"""Best-first branch-and-bound search for the exact proportion value alpha_k.

Nodes are index subsets J grown in "legitimate order": every index added to
a child exceeds every index of its parent, so each size-k subset appears on
exactly one path.  Columns are pre-permuted so the singleton scores
alpha_1({1}) >= ... >= alpha_1({n}); with that ordering a node's bound

    B(J) = alpha_{|J|,J} + sum of the next t singleton scores after max(J),
    t = k - |J|

dominates alpha_{k,K} for every completion K of J, and a freshly attached
child Q = J + {q} can be bounded without evaluating its own subset score:

    B(Q) = alpha_{|J|,J} + alpha_1({q}) + sum of the t-1 scores after q.

Children attach lazily: a node's next sibling is attached only when the
current one gets its subset score evaluated, so the frontier sibling's
bound always covers all of its unattached siblings.  The search keeps a
global lower bound (best evaluated height-k score, with witness) and a
global upper bound (largest leaf bound); selecting an evaluated height-k
leaf as the best leaf proves its score is exactly alpha_k.

For l >= 2 the tail of B(J) is tightened by the cheap-upper-bound form:
the mean of the C(t, l) largest size-l scores among subsets entirely in
{max(J)+1..n}, scaled by C(t,l)/C(t-1,l-1) = t/l, taking whichever of the
one-step and l-step tails is smaller.
"""
from __future__ import annotations

import enum
import heapq
import itertools
import time
from dataclasses import dataclass

import numpy as np

from .alpha import SubsetEvaluator, lp_count_for_scores, score_all_subsets
from .bounds import BoundReport, make_report
from .matrices import IndexSet, SensingMatrix, binom, permute_columns_desc

__all__ = [
    "StopReason",
    "SearchNode",
    "TracePoint",
    "TsaResult",
    "TailBounds",
    "bound_node",
    "bound_child",
    "tsa",
    "tsa_bound_report",
    "write_trace_csv",
]


class StopReason(enum.Enum):
    PROVED = "proved"
    CERTIFIED_HOLDS = "certified_holds"
    CERTIFIED_FAILS = "certified_fails"
    ITERATION_LIMIT = "iteration_limit"
    TIME_LIMIT = "time_limit"


@dataclass
class SearchNode:
    """Tree node: a subset in internal (permuted) indexing plus bookkeeping.

    ``next_child_index`` is the smallest column index not yet attached as a
    child; ``generation`` invalidates stale heap entries after bound
    updates.
    """

    subset: tuple[int, ...]
    bound: float
    alpha_computed: bool = False
    alpha_value: float | None = None
    next_child_index: int = 1
    parent: "SearchNode | None" = None
    is_leaf: bool = True
    generation: int = 0

    @property
    def height(self) -> int:
        return len(self.subset)

    @property
    def max_index(self) -> int:
        return self.subset[-1] if self.subset else 0


@dataclass(frozen=True)
class TracePoint:
    iteration: int
    glb: float
    gub: float
    nodes_attached: int


@dataclass(frozen=True)
class TsaResult:
    k: int
    l: int
    glb: float
    gub: float
    exact: bool
    witness_subset: IndexSet | None
    witness_vector: np.ndarray | None
    iterations: int
    nodes_attached: int
    height_k_nodes: int
    trace: tuple[TracePoint, ...]
    stop_reason: StopReason
    lp_solves: int
    elapsed: float


class TailBounds:
    """Tail bounds over the columns after a given index.

    ``col_scores`` are the singleton scores in (non-increasing) internal
    column order.  For l >= 2, ``l_values``/``l_min_index`` hold every
    size-l subset score sorted by descending value with the subset's
    smallest member, enabling the eligibility filter min(L) > m0.
    """

    def __init__(
        self,
        col_scores: np.ndarray,
        l: int = 1,
        l_values: np.ndarray | None = None,
        l_min_index: np.ndarray | None = None,
    ):
        if np.any(np.diff(col_scores) > 1e-12):
            raise ValueError("singleton scores must be non-increasing")
        self.col_scores = np.asarray(col_scores, dtype=np.float64)
        self.n = self.col_scores.shape[0]
        self._prefix = np.concatenate([[0.0], np.cumsum(self.col_scores)])
        self.l = l
        if l > 1 and (l_values is None or l_min_index is None):
            raise ValueError("size-l score data required for l > 1")
        self._l_values = l_values
        self._l_min_index = l_min_index

    def one_step(self, m0: int, t: int) -> float:
        """Sum of the t singleton scores at internal columns m0+1 .. m0+t."""
        if t == 0:
            return 0.0
        if m0 + t > self.n:
            raise ValueError(f"tail of length {t} after column {m0} leaves range 1..{self.n}")
        return float(self._prefix[m0 + t] - self._prefix[m0])

    def l_step(self, m0: int, t: int) -> float:
        """Mean of the C(t,l) largest eligible size-l scores, scaled by t/l."""
        count = binom(t, self.l)
        total = 0.0
        found = 0
        for value, mn in zip(self._l_values, self._l_min_index):
            if mn > m0:
                total += value
                found += 1
                if found == count:
                    break
        if found < count:
            raise ValueError(f"only {found} eligible size-{self.l} subsets after column {m0}")
        return total / binom(t - 1, self.l - 1)

    def tail(self, m0: int, t: int) -> float:
        one = self.one_step(m0, t)
        if self.l > 1 and t >= self.l:
            return min(one, self.l_step(m0, t))
        return one


def bound_node(node: SearchNode, k: int, tails: TailBounds) -> float:
    """B(J): the node's own score plus the tail bound for its completions."""
    if not node.alpha_computed:
        raise ValueError("node score not yet computed")
    return node.alpha_value + tails.tail(node.max_index, k - node.height)


def bound_child(parent: SearchNode, q: int, k: int, tails: TailBounds) -> float:
    """B(Q) for child Q = J + {q}, without evaluating Q's own subset score."""
    if not parent.alpha_computed:
        raise ValueError("parent score not yet computed")
    t = k - parent.height - 1
    if q <= parent.max_index or q > tails.n - t:
        raise ValueError(f"ineligible child index {q}")
    return parent.alpha_value + float(tails.col_scores[q - 1]) + tails.one_step(q, t)


def tsa(
    matrix: SensingMatrix,
    k: int,
    l: int = 1,
    max_iterations: int | None = None,
    max_time: float | None = None,
    certify_only: bool = False,
    processes: int | None = None,
    node_log: list | None = None,
) -> TsaResult:
    """Exact alpha_k, or a certified [GLB, GUB] interval on early stop.

    Pre-computation scores every column (and every size-l subset for
    l >= 2) and permutes columns by descending singleton score.  The loop
    then repeatedly takes the leaf with the largest bound (ties: greater
    height, then lexicographically smallest subset) and either evaluates
    its subset score, declares it proves alpha_k, or attaches its first
    child.  Deterministic for a given matrix and parameters.  ``node_log``,
    when given, receives every attached node's (subset, parent subset)
    pair, in internal column order and attachment order.
    """
    n = matrix.cols
    if not 1 <= l <= k <= n:
        raise ValueError(f"need 1 <= l <= k <= n, got l={l}, k={k}, n={n}")
    for name, limit in (("max_iterations", max_iterations), ("max_time", max_time)):
        if limit is not None and limit <= 0:
            raise ValueError(f"{name} must be positive, got {limit}")
    t_start = time.perf_counter()

    evaluator0 = SubsetEvaluator(matrix)
    col_scores = np.array([evaluator0.score((i,))[0] for i in range(1, n + 1)])
    lp_solves = n
    permuted = permute_columns_desc(matrix, col_scores)
    sorted_scores = col_scores[np.argsort(-col_scores, kind="stable")]

    if l > 1:
        l_scores = score_all_subsets(permuted, l, processes=processes)
        lp_solves += lp_count_for_scores(n, l)
        order = sorted(range(len(l_scores)), key=lambda i: (-l_scores[i].value, l_scores[i].subset.indices))
        l_values = np.array([l_scores[i].value for i in order])
        l_min_index = np.array([l_scores[i].subset.indices[0] for i in order], dtype=np.int64)
        tails = TailBounds(sorted_scores, l, l_values, l_min_index)
    else:
        tails = TailBounds(sorted_scores)

    evaluator = SubsetEvaluator(permuted)
    root = SearchNode(subset=(), bound=tails.tail(0, k), alpha_computed=True,
                      alpha_value=0.0, next_child_index=1)
    counter = itertools.count()
    heap: list = []

    def _push_entry(node: SearchNode) -> None:
        heapq.heappush(
            heap, (-node.bound, -node.height, node.subset, node.generation, next(counter), node)
        )

    def push(node: SearchNode) -> None:
        node.generation += 1
        _push_entry(node)

    def pop_best() -> SearchNode:
        while heap:
            _, _, _, gen, _, node = heapq.heappop(heap)
            if node.is_leaf and gen == node.generation:
                return node
        raise RuntimeError("leaf pool exhausted before termination")

    def peek_bound() -> float:
        node = pop_best()
        _push_entry(node)  # same generation, entry stays valid
        return node.bound

    push(root)
    glb = 0.0
    glb_subset: tuple[int, ...] | None = None
    glb_witness: np.ndarray | None = None
    gub = min(1.0, root.bound)
    iterations = 0
    nodes_attached = 0
    height_k_nodes = 0
    trace: list[TracePoint] = [TracePoint(0, glb, gub, 0)]
    stop = None
    exact_value: float | None = None

    child_room = lambda parent: n - (k - parent.height - 1)

    def attach_next_child(parent: SearchNode) -> None:
        nonlocal nodes_attached, height_k_nodes
        q = parent.next_child_index
        if q > child_room(parent):
            return  # no eligible children remain
        bound = min(bound_child(parent, q, k, tails), parent.bound)
        child = SearchNode(
            subset=parent.subset + (q,),
            bound=bound,
            next_child_index=q + 1,
            parent=parent,
        )
        parent.next_child_index = q + 1
        parent.is_leaf = False
        nodes_attached += 1
        if child.height == k:
            height_k_nodes += 1
        if node_log is not None:
            node_log.append((child.subset, parent.subset))
        push(child)

    while True:
        if max_iterations is not None and iterations >= max_iterations:
            stop = StopReason.ITERATION_LIMIT
            break
        if max_time is not None and time.perf_counter() - t_start > max_time:
            stop = StopReason.TIME_LIMIT
            break
        iterations += 1
        node = pop_best()
        if not node.alpha_computed:
            value, z = evaluator.score(node.subset, keep_witness=(node.height == k))
            lp_solves += 1 << (node.height - 1)
            node.alpha_computed = True
            node.alpha_value = value
            node.bound = bound_node(node, k, tails)
            push(node)
            if node.height == k and value > glb:
                glb = value
                glb_subset = node.subset
                glb_witness = z
            if node.parent is not None:
                attach_next_child(node.parent)
        elif node.height == k:
            exact_value = node.alpha_value
            glb = gub = exact_value
            if glb_subset is None or node.alpha_value > glb:
                glb_subset = node.subset
                _, glb_witness = evaluator.score(node.subset, keep_witness=True)
            stop = StopReason.PROVED
            trace.append(TracePoint(iterations, glb, min(1.0, gub), nodes_attached))
            break
        else:
            attach_next_child(node)

        gub = min(gub, min(1.0, peek_bound()))
        if trace[-1].glb != glb or trace[-1].gub != gub:
            trace.append(TracePoint(iterations, glb, gub, nodes_attached))
        if certify_only:
            if gub < 0.5:
                stop = StopReason.CERTIFIED_HOLDS
                break
            if glb >= 0.5:
                stop = StopReason.CERTIFIED_FAILS
                break

    if trace[-1].iteration != iterations:
        trace.append(TracePoint(iterations, glb, min(1.0, gub), nodes_attached))
    witness_subset = None
    witness_vector = None
    if glb_subset is not None:
        witness_subset = IndexSet(permuted.to_original_columns(glb_subset))
        if glb_witness is not None:
            witness_vector = permuted.vector_to_original(glb_witness)
    return TsaResult(
        k=k,
        l=l,
        glb=glb,
        gub=min(1.0, gub),
        exact=stop is StopReason.PROVED,
        witness_subset=witness_subset,
        witness_vector=witness_vector,
        iterations=iterations,
        nodes_attached=nodes_attached,
        height_k_nodes=height_k_nodes,
        trace=tuple(trace),
        stop_reason=stop,
        lp_solves=lp_solves,
        elapsed=time.perf_counter() - t_start,
    )


def tsa_bound_report(result: TsaResult) -> BoundReport:
    return make_report(
        "tsa",
        result.k,
        result.l,
        result.glb,
        result.gub,
        result.exact,
        result.lp_solves,
        result.elapsed,
        lower_witnessed=result.witness_subset is not None,
    )


def write_trace_csv(result: TsaResult, path) -> None:
    """Bound trace as CSV: iteration, glb, gub, nodes_attached."""
    lines = ["iteration,glb,gub,nodes_attached"]
    for p in result.trace:
        lines.append(f"{p.iteration},{p.glb:.17g},{p.gub:.17g},{p.nodes_attached}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
