"""Ground-truth alpha_k by full enumeration of all C(n, k) subsets."""
from __future__ import annotations

import itertools
import time
from dataclasses import dataclass
from multiprocessing import get_context

import numpy as np

from .alpha import SubsetEvaluator, _iter_from_rank, subset_chunks
from .bounds import BoundReport, make_report
from .matrices import IndexSet, SensingMatrix, binom

__all__ = ["EsmBudgetError", "EsmResult", "esm_alpha"]

DEFAULT_BUDGET = 10_000_000


class EsmBudgetError(RuntimeError):
    """Enumeration would exceed the subset budget; carries a cost estimate
    extrapolated from timing a small sample of subsets."""

    def __init__(self, num_subsets: int, lp_solves: int, estimated_seconds: float):
        self.num_subsets = num_subsets
        self.lp_solves = lp_solves
        self.estimated_seconds = estimated_seconds
        super().__init__(
            f"{num_subsets} subsets exceed the budget; full enumeration needs "
            f"{lp_solves} LP solves, estimated {estimated_seconds:.3g} s"
        )


@dataclass(frozen=True)
class EsmResult:
    report: BoundReport
    argmax: IndexSet
    witness: np.ndarray | None


def _reduce_best(current, candidate):
    """Keep the larger value; ties go to the lexicographically smaller subset."""
    if candidate[0] > current[0] or (candidate[0] == current[0] and candidate[1] < current[1]):
        return candidate
    return current


_worker_eval: SubsetEvaluator | None = None


def _worker_init(matrix: SensingMatrix) -> None:
    global _worker_eval
    _worker_eval = SubsetEvaluator(matrix)


def _worker_best(args) -> tuple[float, tuple[int, ...]]:
    n, k, start, stop = args
    best = (-1.0, (n + 1,))
    for combo in _iter_from_rank(n, k, start, stop):
        value, _ = _worker_eval.score(combo)
        best = _reduce_best(best, (value, combo))
    return best


def esm_alpha(
    matrix: SensingMatrix,
    k: int,
    budget: int | None = DEFAULT_BUDGET,
    processes: int | None = None,
) -> EsmResult:
    """Exact alpha_k with its maximizing subset and witness vector.

    Raises EsmBudgetError when C(n, k) exceeds ``budget``; the error carries
    the LP count and a time estimate (mean per-subset time over a sample of
    up to 100 subsets, times the subset count).
    """
    n = matrix.cols
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    total = binom(n, k)
    lp_solves = total * (1 << (k - 1))
    evaluator = SubsetEvaluator(matrix)
    if budget is not None and total > budget:
        sample = min(100, budget)
        t0 = time.perf_counter()
        for combo in itertools.islice(itertools.combinations(range(1, n + 1), k), sample):
            evaluator.score(combo)
        per_subset = (time.perf_counter() - t0) / sample
        raise EsmBudgetError(total, lp_solves, per_subset * total)

    t0 = time.perf_counter()
    if processes is not None and processes > 1 and total >= 4 * processes:
        ctx = get_context("fork")
        chunks = subset_chunks(n, k, processes * 4)
        with ctx.Pool(processes, initializer=_worker_init, initargs=(matrix,)) as pool:
            parts = pool.map(_worker_best, [(n, k, a, b) for a, b in chunks])
        best_val, best_subset = (-1.0, (n + 1,))
        for part in parts:
            best_val, best_subset = _reduce_best((best_val, best_subset), part)
        # witness for the winner only
        _, witness = evaluator.score(best_subset, keep_witness=True)
    else:
        best_val, best_subset, witness = -1.0, (n + 1,), None
        for combo in itertools.combinations(range(1, n + 1), k):
            value, z = evaluator.score(combo, keep_witness=True)
            if value > best_val or (value == best_val and combo < best_subset):
                best_val, best_subset, witness = value, combo, z
    elapsed = time.perf_counter() - t0
    report = make_report(
        "esm", k, None, best_val, best_val, True, lp_solves, elapsed, lower_witnessed=True
    )
    return EsmResult(report, IndexSet(best_subset), witness)
