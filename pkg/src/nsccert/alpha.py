"""Per-subset proportion values via sign-pattern LPs.

For a subset L of columns, the subset score is the largest fraction of its
l1 mass a nonzero null-space vector z of A can concentrate on L:

    maximize ||z_L||_1  subject to  A z = 0,  ||z||_1 <= 1.

Maximizing the convex term ||z_L||_1 is handled by enumerating sign
patterns s of z over L and solving, for each, the LP

    maximize sum_{i in L} s_i z_i  s.t.  A z = 0, ||z||_1 <= 1

with the split z = u - v, u, v >= 0 and sum(u + v) <= 1.  Negating z flips
the pattern without changing the value, so only the 2^(l-1) patterns with
s fixed positive on the first element are solved.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from multiprocessing import get_context
from typing import Iterator, Mapping, Sequence

import numpy as np

from .lp import PreparedLp
from .matrices import IndexSet, SensingMatrix, binom

__all__ = [
    "SubsetScore",
    "SubsetEvaluator",
    "alpha_subset",
    "alpha_column_dual",
    "enumerate_subsets",
    "unrank_subset",
    "subset_chunks",
    "score_all_subsets",
]

_WITNESS_TOL = 1e-12


@dataclass(frozen=True)
class SubsetScore:
    """A subset, its proportion value in [0, 1], and an optional witness
    null-space vector achieving it."""

    subset: IndexSet
    value: float
    witness: np.ndarray | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"score {self.value} outside [0, 1]")


class SubsetEvaluator:
    """Reusable sign-pattern LP machinery for one sensing matrix.

    The equality system [A, -A] (u, v) = 0 with sum(u+v) <= 1 is prepared
    once; each subset evaluation then only pays for its optimizing pivots.
    """

    def __init__(self, matrix: SensingMatrix):
        self.matrix = matrix
        a = matrix.entries
        m, n = a.shape
        self.n = n
        self._lp = PreparedLp(
            np.hstack([a, -a]),
            np.zeros(m),
            np.ones(2 * n),
            1.0,
        )
        self.lp_solves = 0

    def score(self, subset: Sequence[int], keep_witness: bool = False):
        """Score one subset of 1-based column indices.

        Returns (value, witness-or-None).  The subset must be in range; the
        caller guarantees sortedness where it matters.
        """
        n = self.n
        l = len(subset)
        if l == 0:
            raise ValueError("subset must be nonempty")
        if min(subset) < 1 or max(subset) > n:
            raise ValueError(f"subset {tuple(subset)} out of range 1..{n}")
        idx0 = [i - 1 for i in subset]
        best = 0.0
        best_z: np.ndarray | None = None
        c = np.zeros(2 * n)
        for tail_signs in itertools.product((1.0, -1.0), repeat=l - 1):
            signs = (1.0,) + tail_signs
            c[:] = 0.0
            for i, s in zip(idx0, signs):
                c[i] = s
                c[n + i] = -s
            value, primal, _ = self._lp.solve_value(c)
            self.lp_solves += 1
            if value > best:
                best = value
                if keep_witness:
                    best_z = primal[:n] - primal[n:]
        if best > 1.0:
            if best > 1.0 + 1e-6:
                raise ArithmeticError(f"subset score {best} exceeds 1 beyond tolerance")
            best = 1.0
        if best <= _WITNESS_TOL:
            best = max(best, 0.0)
            best_z = None
        return best, best_z


def alpha_subset(matrix: SensingMatrix, subset: IndexSet | Sequence[int],
                 keep_witness: bool = True) -> SubsetScore:
    """Proportion value for one subset; 0 when the null space is trivial."""
    idx = subset if isinstance(subset, IndexSet) else IndexSet.of(*subset)
    value, witness = SubsetEvaluator(matrix).score(idx.indices, keep_witness=keep_witness)
    return SubsetScore(idx, value, witness)


def alpha_column_dual(matrix: SensingMatrix, i: int) -> float:
    """min over y of the sup-norm of (e_i - A^T y), as a single LP.

    Variables: y split into y+ - y-, the bound t, and one slack per
    two-sided residual constraint:  A^T y + t - s1 = e_i,
    A^T y - t + s2 = e_i.  Equals the proportion value of {i}.
    """
    a = matrix.entries
    m, n = a.shape
    if not 1 <= i <= n:
        raise ValueError(f"column index {i} out of range 1..{n}")
    nv = 2 * m + 1 + 2 * n  # y+, y-, t, s1, s2
    eq = np.zeros((2 * n, nv))
    at = a.T
    eq[:n, :m] = at
    eq[:n, m : 2 * m] = -at
    eq[:n, 2 * m] = 1.0
    eq[:n, 2 * m + 1 : 2 * m + 1 + n] = -np.eye(n)
    eq[n:, :m] = at
    eq[n:, m : 2 * m] = -at
    eq[n:, 2 * m] = -1.0
    eq[n:, 2 * m + 1 + n :] = np.eye(n)
    rhs = np.zeros(2 * n)
    rhs[i - 1] = 1.0
    rhs[n + i - 1] = 1.0
    c = np.zeros(nv)
    c[2 * m] = -1.0
    value, _, _ = PreparedLp(eq, rhs).solve_value(c)
    return -value


def enumerate_subsets(n: int, l: int) -> Iterator[IndexSet]:
    """All C(n, l) subsets of {1..n}, lexicographic, each exactly once."""
    if not 1 <= l <= n:
        raise ValueError(f"need 1 <= l <= n, got l={l}, n={n}")
    for combo in itertools.combinations(range(1, n + 1), l):
        yield IndexSet(combo)


def unrank_subset(n: int, l: int, rank: int) -> tuple[int, ...]:
    """The subset at position ``rank`` (0-based) in lexicographic order."""
    if not 0 <= rank < binom(n, l):
        raise ValueError(f"rank {rank} out of range for C({n},{l})")
    out = []
    prev = 0
    r = rank
    for slot in range(l):
        for v in range(prev + 1, n + 1):
            block = binom(n - v, l - slot - 1)
            if r < block:
                out.append(v)
                prev = v
                break
            r -= block
    return tuple(out)


def subset_chunks(n: int, l: int, num_chunks: int) -> list[tuple[int, int]]:
    """Split the lexicographic enumeration into contiguous rank ranges."""
    total = binom(n, l)
    num_chunks = max(1, min(num_chunks, total))
    bounds = np.linspace(0, total, num_chunks + 1, dtype=np.int64)
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if a < b]


def _iter_from_rank(n: int, l: int, start: int, stop: int) -> Iterator[tuple[int, ...]]:
    combo = list(unrank_subset(n, l, start))
    for _ in range(stop - start):
        yield tuple(combo)
        # lexicographic successor
        i = l - 1
        while i >= 0 and combo[i] == n - (l - 1 - i):
            i -= 1
        if i < 0:
            return
        combo[i] += 1
        for j in range(i + 1, l):
            combo[j] = combo[j - 1] + 1


_worker_eval: SubsetEvaluator | None = None


def _worker_init(matrix: SensingMatrix) -> None:
    global _worker_eval
    _worker_eval = SubsetEvaluator(matrix)


def _worker_score_range(args: tuple[int, int, int, int]) -> np.ndarray:
    n, l, start, stop = args
    vals = np.empty(stop - start)
    for pos, combo in enumerate(_iter_from_rank(n, l, start, stop)):
        vals[pos], _ = _worker_eval.score(combo)
    return vals


def score_all_subsets(
    matrix: SensingMatrix, l: int, processes: int | None = None
) -> list[SubsetScore]:
    """Scores for every size-l subset, in lexicographic order, no witnesses.

    ``processes`` > 1 forks workers over contiguous rank ranges; the result
    is ordered by rank, so it is identical to the serial one.
    """
    n = matrix.cols
    if not 1 <= l <= n:
        raise ValueError(f"need 1 <= l <= n, got l={l}, n={n}")
    total = binom(n, l)
    if processes is not None and processes > 1 and total >= 4 * processes:
        chunks = subset_chunks(n, l, processes * 4)
        ctx = get_context("fork")
        with ctx.Pool(processes, initializer=_worker_init, initargs=(matrix,)) as pool:
            parts = pool.map(_worker_score_range, [(n, l, a, b) for a, b in chunks])
        values = np.concatenate(parts)
    else:
        ev = SubsetEvaluator(matrix)
        values = np.empty(total)
        for pos, combo in enumerate(itertools.combinations(range(1, n + 1), l)):
            values[pos], _ = ev.score(combo)
    return [
        SubsetScore(IndexSet(combo), float(v))
        for combo, v in zip(itertools.combinations(range(1, n + 1), l), values)
    ]


def as_score_map(scores: Sequence[SubsetScore] | Mapping[tuple[int, ...], float]):
    if isinstance(scores, Mapping):
        return scores
    return {s.subset.indices: s.value for s in scores}


def lp_count_for_scores(n: int, l: int) -> int:
    """LP solves needed to score every size-l subset (2^(l-1) per subset)."""
    return binom(n, l) * (1 << (l - 1))
