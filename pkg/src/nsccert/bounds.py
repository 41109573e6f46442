"""Polynomial-time certificates: pick-l bounds, CUB, the optimized pick-l
program, recoverable-sparsity bounds, and the matrix-wide LP baseline.

All upper bounds here dominate the exact proportion value alpha_k, so an
upper bound below 1/2 certifies the null space condition for sparsity k.
"""
from __future__ import annotations

import enum
import itertools
import math
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .alpha import SubsetScore, as_score_map
from .lp import LpError, PreparedLp
from .matrices import IndexSet, SensingMatrix, binom

__all__ = [
    "NscDecision",
    "BoundReport",
    "IncompleteScoresError",
    "ConstraintBudgetError",
    "pick_l_upper_bound",
    "pick_l_upper_bound_lp",
    "cub",
    "optimized_pick_l",
    "kmax_lower_bound",
    "lp_baseline_alpha",
    "nsc_certify",
]


class NscDecision(enum.Enum):
    HOLDS = "holds"
    FAILS = "fails"
    INCONCLUSIVE = "inconclusive"


class IncompleteScoresError(ValueError):
    """A bound needing the complete score family got a partial one."""


class ConstraintBudgetError(RuntimeError):
    """The optimized pick-l constraint family exceeds the configured budget."""


@dataclass(frozen=True)
class BoundReport:
    """Certified interval [lower, upper] for alpha_k plus the NSC verdict.

    ``lower_witnessed`` records whether the lower bound is backed by an
    actual null-space vector (exhaustive/tree-search lower bounds are;
    the pick-family bounds report lower = 0).
    """

    method: str
    k: int
    l: int | None
    lower: float
    upper: float
    exact: bool
    lp_solves: int
    elapsed: float
    nsc_decision: NscDecision
    lower_witnessed: bool = False

    def __post_init__(self) -> None:
        if not (0.0 <= self.lower <= self.upper + 1e-12 and self.upper <= 1.0):
            raise ValueError(f"bad bound interval [{self.lower}, {self.upper}]")
        if self.exact and self.upper - self.lower > 1e-9:
            raise ValueError("exact report with lower != upper")


def nsc_certify(report: BoundReport) -> NscDecision:
    """NSC holds iff alpha_k < 1/2; decided on full-precision bounds only."""
    if report.upper < 0.5:
        return NscDecision.HOLDS
    if report.lower >= 0.5 and (report.exact or report.lower_witnessed):
        return NscDecision.FAILS
    return NscDecision.INCONCLUSIVE


def make_report(
    method: str,
    k: int,
    l: int | None,
    lower: float,
    upper: float,
    exact: bool,
    lp_solves: int,
    elapsed: float,
    lower_witnessed: bool = False,
) -> BoundReport:
    upper = min(1.0, upper)
    lower = min(max(0.0, lower), 1.0)
    stub = BoundReport(
        method, k, l, lower, upper, exact, lp_solves, elapsed,
        NscDecision.INCONCLUSIVE, lower_witnessed,
    )
    return BoundReport(
        method, k, l, lower, upper, exact, lp_solves, elapsed,
        nsc_certify(stub), lower_witnessed,
    )


def _check_scores(scores: Sequence[SubsetScore], l: int) -> tuple[int, np.ndarray]:
    """Validate a complete size-l score family; returns (n, values array)."""
    if not scores:
        raise IncompleteScoresError("empty score set")
    sizes = {len(s.subset) for s in scores}
    if sizes != {l}:
        raise IncompleteScoresError(f"scores must all have subsets of size {l}, got sizes {sizes}")
    n = max(s.subset.indices[-1] for s in scores)
    if len(scores) != binom(n, l) or len({s.subset.indices for s in scores}) != len(scores):
        raise IncompleteScoresError(
            f"expected all C({n},{l})={binom(n, l)} subset scores, got {len(scores)}"
        )
    return n, np.array([s.value for s in scores])


def pick_l_upper_bound(scores: Sequence[SubsetScore], k: int, l: int) -> BoundReport:
    """Sorting form of the pick-l bound: the C(k,l) largest subset scores,
    summed and divided by C(k-1, l-1), capped at 1."""
    t0 = time.perf_counter()
    n, values = _check_scores(scores, l)
    if not 1 <= l <= k <= n:
        raise ValueError(f"need 1 <= l <= k <= n, got l={l}, k={k}, n={n}")
    top = np.sort(values)[::-1][: binom(k, l)]
    upper = float(top.sum()) / binom(k - 1, l - 1)
    return make_report(
        "pick_l", k, l, 0.0, upper, False, 0, time.perf_counter() - t0
    )


def pick_l_upper_bound_lp(scores: Sequence[SubsetScore], k: int, l: int) -> BoundReport:
    """LP form of the pick-l bound (no sorting): maximize scores . gamma over
    0 <= gamma_i <= 1/C(k-1,l-1), sum gamma <= k/l.  Cross-checks the
    sorting form; the two agree to LP tolerance."""
    t0 = time.perf_counter()
    n, values = _check_scores(scores, l)
    if not 1 <= l <= k <= n:
        raise ValueError(f"need 1 <= l <= k <= n, got l={l}, k={k}, n={n}")
    nsub = values.shape[0]
    cap = 1.0 / binom(k - 1, l - 1)
    # gamma_i + s_i = cap as equality rows; the budget row rides the ineq slot
    eq = np.hstack([np.eye(nsub), np.eye(nsub)])
    rhs = np.full(nsub, cap)
    ineq = np.concatenate([np.ones(nsub), np.zeros(nsub)])
    c = np.concatenate([values, np.zeros(nsub)])
    value, _, _ = PreparedLp(eq, rhs, ineq, k / l).solve_value(c)
    return make_report(
        "pick_l_lp", k, l, 0.0, value, False, 1, time.perf_counter() - t0
    )


def cub(
    scores: Sequence[SubsetScore] | Mapping[tuple[int, ...], float],
    subset: IndexSet | Sequence[int],
    l: int,
) -> float:
    """Cheap upper bound on the proportion value of one subset K: the mean
    of its size-l subset scores, scaled by C(k,l)/C(k-1,l-1) = k/l."""
    table = as_score_map(scores)
    k_idx = tuple(subset.indices if isinstance(subset, IndexSet) else subset)
    if len(k_idx) < l:
        raise ValueError(f"need |K| >= l, got {len(k_idx)} < {l}")
    total = 0.0
    for combo in itertools.combinations(k_idx, l):
        if combo not in table:
            raise IncompleteScoresError(f"missing score for subset {combo}")
        total += table[combo]
    return total / binom(len(k_idx) - 1, l - 1)


def optimized_pick_l(
    scores: Sequence[SubsetScore],
    k: int,
    l: int,
    n: int | None = None,
    max_constraints: int = 2_000_000,
) -> BoundReport:
    """Tightened pick-l bound: optimize the combination coefficients.

    maximize scores . gamma,  gamma >= 0,  sum gamma <= k/l, and for every
    b in 1..l and every b-subset B:
        sum_{i : B subset of L_i} gamma_i  <=  C(k-b, l-b) / C(k-1, l-1).

    Never worse than the sorting bound, and non-increasing as l grows.
    """
    t0 = time.perf_counter()
    n_inferred, values = _check_scores(scores, l)
    if n is None:
        n = n_inferred
    if not 1 <= l <= k <= n:
        raise ValueError(f"need 1 <= l <= k <= n, got l={l}, k={k}, n={n}")
    nsub = values.shape[0]
    n_rows = sum(binom(n, b) for b in range(1, l + 1))
    if n_rows > max_constraints:
        raise ConstraintBudgetError(
            f"constraint family has {n_rows} rows, over the budget of {max_constraints}"
        )
    denom = binom(k - 1, l - 1)
    lhs = np.zeros((n_rows, nsub))
    rhs = np.empty(n_rows)
    row_of: dict[tuple[int, ...], int] = {}
    r = 0
    for b in range(1, l + 1):
        bound_b = binom(k - b, l - b) / denom
        for combo in itertools.combinations(range(1, n + 1), b):
            row_of[combo] = r
            rhs[r] = bound_b
            r += 1
    for i, s in enumerate(scores):
        for b in range(1, l + 1):
            for combo in itertools.combinations(s.subset.indices, b):
                lhs[row_of[combo], i] = 1.0
    # slack per family row; the total-budget row uses the ineq slot
    eq = np.hstack([lhs, np.eye(n_rows)])
    ineq = np.concatenate([np.ones(nsub), np.zeros(n_rows)])
    c = np.concatenate([values, np.zeros(n_rows)])
    value, _, _ = PreparedLp(eq, rhs, ineq, k / l).solve_value(c)
    return make_report(
        "optimized_pick_l", k, l, 0.0, value, False, 1, time.perf_counter() - t0
    )


def kmax_lower_bound(alpha_l: float, l: int, n: int | None = None) -> int:
    """Sparsity ceil(l/2 / alpha_l) - 1 is recoverable; valid with an upper
    bound of alpha_l in place of the exact value.

    alpha_l <= 0 means the null space is trivial, so every sparsity is
    recoverable: returns n when given, else raises.
    """
    if l < 1:
        raise ValueError(f"need l >= 1, got {l}")
    if alpha_l <= 0.0:
        if n is None:
            raise ValueError("alpha_l <= 0 (trivial null space): pass n for the bound")
        return n
    if alpha_l > 1.0 + 1e-9:
        raise ValueError(f"alpha_l = {alpha_l} exceeds 1")
    # exact rational ceiling; float division could tip over a knife edge
    return math.ceil(Fraction(l, 2) / Fraction(alpha_l)) - 1


def lp_baseline_alpha(matrix: SensingMatrix, k: int) -> BoundReport:
    """Matrix-wide LP relaxation bound on alpha_k.

    The relaxation minimizes, over Y in R^(m x n), the largest column
    (k,1)-norm of I - Y^T A, a single coupled program of design dimension
    m*n (a column's (k,1)-norm is the sum of its k largest magnitudes).
    Solved here in its equivalent dual form

        maximize trace(U) over U in R^(n x n)
        s.t. every column of U is in the null space of A, and
             sum_j max(||row_j(U)||_inf, ||row_j(U)||_1 / k) <= 1

    via scipy's HiGHS backend: unlike every other program in the package,
    this one is large and massively degenerate, which the in-house tableau
    simplex cannot handle in reasonable time.  HiGHS is deterministic for
    a fixed input, preserving the reproducibility contract.

    Never exceeds the pick-1 bound; coincides with it at k = 1.
    """
    from scipy import sparse
    from scipy.optimize import linprog

    t0 = time.perf_counter()
    a = matrix.entries
    m, n = a.shape
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    # variables: U (n^2, free, flat index j*n + l), v (n^2, v >= |U|), t (n)
    nu = n * n
    vv = nu
    tv = 2 * nu
    nv = 2 * nu + n
    eq_rows = []
    for l in range(n):  # A @ U[:, l] == 0
        block = sparse.lil_matrix((m, nv))
        block[:, l : nu : n] = a
        eq_rows.append(block)
    ub_rows = sparse.lil_matrix((2 * nu + nu + n + 1, nv))
    rhs = np.zeros(2 * nu + nu + n + 1)
    r = 0
    for pos in range(nu):  # +-U_jl <= v_jl
        ub_rows[r, pos] = 1.0
        ub_rows[r, vv + pos] = -1.0
        ub_rows[r + 1, pos] = -1.0
        ub_rows[r + 1, vv + pos] = -1.0
        r += 2
    for j in range(n):
        for l in range(n):  # v_jl <= t_j
            ub_rows[r, vv + j * n + l] = 1.0
            ub_rows[r, tv + j] = -1.0
            r += 1
    for j in range(n):  # sum_l v_jl <= k * t_j
        ub_rows[r, vv + j * n : vv + (j + 1) * n] = 1.0
        ub_rows[r, tv + j] = -float(k)
        r += 1
    ub_rows[r, tv : tv + n] = 1.0  # sum_j t_j <= 1
    rhs[r] = 1.0
    c = np.zeros(nv)
    for j in range(n):
        c[j * n + j] = -1.0  # maximize the trace
    bounds_spec = [(None, None)] * nu + [(0, None)] * (nu + n)
    res = linprog(
        c,
        A_ub=sparse.csr_matrix(ub_rows),
        b_ub=rhs,
        A_eq=sparse.csr_matrix(sparse.vstack(eq_rows)),
        b_eq=np.zeros(m * n),
        bounds=bounds_spec,
        method="highs",
    )
    if res.status != 0:
        raise LpError(f"baseline LP solver returned status {res.status}: {res.message}")
    return make_report(
        "lp_baseline", k, None, 0.0, -float(res.fun), False, 1,
        time.perf_counter() - t0,
    )
