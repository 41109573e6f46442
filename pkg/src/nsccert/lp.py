"""Deterministic dense linear-program solver.

Standard form solved here: maximize c.x subject to eq_lhs @ x == eq_rhs,
optionally one extra row ineq_lhs @ x <= ineq_rhs, and x >= 0.  Callers with
several inequality rows add their own slack variables.

The algorithm is a two-phase primal simplex on the full dense tableau.  The
pivot rule is Dantzig's (most negative reduced cost, lowest index on ties)
until the objective stalls for a stretch of degenerate pivots, after which
Bland's rule takes over until strict progress resumes; Bland's rule cannot
cycle, so termination is guaranteed.  The leaving row is the minimum-ratio
row, ties broken by smallest basic variable index.  Every choice is
deterministic, so identical problems produce identical solutions bit for
bit.

Phase one is run with artificial variables only where needed (rows whose
slack column cannot serve as a basis).  Once feasible, basic artificials
are pivoted out at zero level and redundant rows dropped, so phase two
operates on a clean artificial-free tableau.  ``PreparedLp`` caches that
feasible tableau, letting callers re-solve the same constraint set under
many objectives without repeating phase one.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from numba import njit

__all__ = ["LpError", "LpStatus", "LpProblem", "LpSolution", "PreparedLp", "solve_lp"]

FEAS_TOL = 1e-9
COST_TOL = 1e-9
PIVOT_TOL = 1e-10
RATIO_TIE = 1e-12
_STALL_SWITCH = 25
_REFACTOR_EVERY = 120  # pivots between exact tableau rebuilds


class LpError(RuntimeError):
    """Solver failure: iteration limit or a numerical-integrity check."""


class LpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LpProblem:
    """Maximize ``objective @ x`` over ``eq_lhs @ x == eq_rhs``, optional
    ``ineq_lhs @ x <= ineq_rhs``, ``x >= 0``."""

    objective: np.ndarray
    eq_lhs: np.ndarray
    eq_rhs: np.ndarray
    ineq_lhs: np.ndarray | None = None
    ineq_rhs: float | None = None

    def __post_init__(self) -> None:
        c = np.ascontiguousarray(self.objective, dtype=np.float64)
        a = np.ascontiguousarray(self.eq_lhs, dtype=np.float64)
        b = np.ascontiguousarray(self.eq_rhs, dtype=np.float64)
        if c.ndim != 1:
            raise ValueError("objective must be a vector")
        if a.ndim != 2 or a.shape != (b.shape[0], c.shape[0]):
            raise ValueError(
                f"dimension mismatch: eq_lhs {a.shape}, eq_rhs {b.shape}, objective {c.shape}"
            )
        arrays = [c, a, b]
        if (self.ineq_lhs is None) != (self.ineq_rhs is None):
            raise ValueError("ineq_lhs and ineq_rhs must be given together")
        if self.ineq_lhs is not None:
            g = np.ascontiguousarray(self.ineq_lhs, dtype=np.float64)
            if g.shape != (c.shape[0],):
                raise ValueError(f"ineq_lhs shape {g.shape} does not match {c.shape[0]} vars")
            arrays.append(g)
            if not np.isfinite(self.ineq_rhs):
                raise ValueError("non-finite coefficient in ineq_rhs")
            object.__setattr__(self, "ineq_lhs", g)
            object.__setattr__(self, "ineq_rhs", float(self.ineq_rhs))
        for arr in arrays:
            if not np.all(np.isfinite(arr)):
                raise ValueError("non-finite coefficient in LP data")
            arr.setflags(write=False)
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "eq_lhs", a)
        object.__setattr__(self, "eq_rhs", b)

    @property
    def num_vars(self) -> int:
        return self.objective.shape[0]


@dataclass(frozen=True)
class LpSolution:
    status: LpStatus
    objective_value: float
    primal: np.ndarray
    iterations: int
    dual: np.ndarray | None = None


@njit(cache=True)
def _pivot_1step(T, basis, r, q):
    ncols = T.shape[1]
    piv = T[r, q]
    for j in range(ncols):
        T[r, j] /= piv
    for i in range(T.shape[0]):
        if i != r:
            f = T[i, q]
            if f != 0.0:
                for j in range(ncols):
                    T[i, j] -= f * T[r, j]
                T[i, q] = 0.0
    T[r, q] = 1.0
    basis[r] = q


@njit(cache=True)
def _pivot_loop(T, basis, m, nlimit, max_iter, stall_switch):
    """Simplex pivots on tableau T (cost row at index m, rhs in last column).

    Reduced-cost convention for maximization: optimal when every entry of
    the cost row over columns [0, nlimit) is >= -COST_TOL.  The leaving row
    is the minimum-ratio row; among ties the largest pivot element wins
    (numerical stability), except under Bland's rule where the anti-cycling
    guarantee needs the smallest basic index.  Returns
    (status, iterations): 0 optimal, 2 iteration limit, 3 unbounded.
    """
    it = 0
    stall = 0
    bland = False
    last_obj = T[m, -1]
    while it < max_iter:
        q = -1
        if bland:
            for j in range(nlimit):
                if T[m, j] < -COST_TOL:
                    q = j
                    break
        else:
            best = -COST_TOL
            for j in range(nlimit):
                if T[m, j] < best:
                    best = T[m, j]
                    q = j
        if q == -1:
            return 0, it
        rbest = np.inf
        r = -1
        for i in range(m):
            a = T[i, q]
            if a > PIVOT_TOL:
                ratio = T[i, -1] / a
                if ratio < rbest - RATIO_TIE:
                    rbest = ratio
                    r = i
                elif ratio <= rbest + RATIO_TIE and r >= 0:
                    if bland:
                        if basis[i] < basis[r]:
                            r = i
                    elif a > T[r, q] or (a == T[r, q] and basis[i] < basis[r]):
                        r = i
        if r == -1:
            return 3, it
        _pivot_1step(T, basis, r, q)
        it += 1
        obj = T[m, -1]
        if bland:
            if obj > last_obj + RATIO_TIE:
                bland = False
                stall = 0
        else:
            if obj <= last_obj + RATIO_TIE:
                stall += 1
                if stall >= stall_switch:
                    bland = True
                    stall = 0
            else:
                stall = 0
        last_obj = obj
    return 2, it


def _refactor(T, basis, m, sys_rows, c_full):
    """Rebuild the tableau exactly from the original rows and current basis.

    Long runs of rank-one pivot updates accumulate roundoff; solving
    B X = [A | b] afresh resets the error.  Raises on a singular basis or
    a basic value that has gone more than slightly negative.
    """
    try:
        fresh = np.linalg.solve(sys_rows[:, basis], sys_rows)
    except np.linalg.LinAlgError as exc:
        raise LpError(f"singular basis during refactorization: {exc}") from None
    rhs = fresh[:, -1]
    if rhs.size and rhs.min() < -1e-7:
        raise LpError(f"refactorization found infeasible basic value {rhs.min():.3e}")
    np.clip(rhs, 0.0, None, out=rhs)
    T[:m] = fresh
    T[m] = c_full[basis] @ fresh - c_full


def _steer(T, basis, m, nlimit, sys_rows, c_full, cap):
    """Drive the pivot loop with periodic refactorization.

    A terminal claim (optimal or unbounded) is only accepted when it holds
    on a freshly rebuilt tableau, so numerical drift can neither stop the
    solve early nor manufacture an unbounded ray on a compact region.
    Returns (status, iterations): 0 optimal, 3 unbounded.
    """
    iters = 0
    just_refactored = False
    for _ in range(4000):
        chunk = min(_REFACTOR_EVERY, cap - iters)
        if chunk <= 0:
            raise LpError(f"iteration limit after {iters} pivots")
        status, it = _pivot_loop(T, basis, m, nlimit, chunk, _STALL_SWITCH)
        iters += it
        if status == 0 and iters < _REFACTOR_EVERY and not just_refactored:
            return 0, iters  # short clean run from an exact starting tableau
        if status == 3 and it == 0 and just_refactored:
            return 3, iters
        _refactor(T, basis, m, sys_rows, c_full)
        just_refactored = True
        if status == 0 and (nlimit == 0 or T[m, :nlimit].min() >= -COST_TOL):
            return 0, iters
    raise LpError("refactorization cycle guard tripped")


class PreparedLp:
    """A feasible basis for one constraint set, reusable under many objectives.

    Phase one runs once at construction.  ``solve`` copies the cached
    tableau, installs the reduced costs of the requested objective and runs
    only the optimizing phase, which is what makes evaluating thousands of
    objectives over one null space affordable.
    """

    def __init__(
        self,
        eq_lhs: np.ndarray,
        eq_rhs: np.ndarray,
        ineq_lhs: np.ndarray | None = None,
        ineq_rhs: float | None = None,
    ):
        a = np.asarray(eq_lhs, dtype=np.float64)
        if a.ndim == 1:
            a = a.reshape(0, a.shape[0]) if a.size == 0 else a.reshape(1, -1)
        b = np.atleast_1d(np.asarray(eq_rhs, dtype=np.float64))
        meq, n = a.shape
        has_ineq = ineq_lhs is not None
        self.num_vars = n
        self.num_eq = meq
        self.has_ineq = has_ineq
        nv = n + (1 if has_ineq else 0)  # structural + slack
        m = meq + (1 if has_ineq else 0)

        rows = np.zeros((m, nv + 1))
        rows[:meq, :n] = a
        rows[:meq, -1] = b
        if has_ineq:
            rows[meq, :n] = np.asarray(ineq_lhs, dtype=np.float64)
            rows[meq, n] = 1.0  # slack
            rows[meq, -1] = float(ineq_rhs)
        # normalize rhs signs; remember the flips for dual recovery
        signs = np.ones(m)
        neg = rows[:, -1] < 0
        rows[neg] *= -1.0
        signs[neg] = -1.0

        # initial basis: the slack where it survived sign normalization,
        # artificial columns everywhere else
        art_rows = [r for r in range(m) if not (has_ineq and r == meq and not neg[meq])]
        n_art = len(art_rows)
        T = np.zeros((m + 1, nv + n_art + 1))
        T[:m, :nv] = rows[:, :nv]
        T[:m, -1] = rows[:, -1]
        basis = np.full(m, -1, dtype=np.int64)
        if has_ineq and not neg[meq]:
            basis[meq] = n
        for j, r in enumerate(art_rows):
            T[r, nv + j] = 1.0
            basis[r] = nv + j

        # phase one: maximize -(sum of artificials)
        cost1 = np.zeros(nv + n_art + 1)
        for r in art_rows:
            cost1 -= T[r]
        cost1[nv : nv + n_art] = 0.0
        T[m] = cost1
        iters1 = 0
        if T[m, -1] < -FEAS_TOL:  # objective is -(sum of artificial values)
            sys1 = np.zeros((m, nv + n_art + 1))
            sys1[:, :nv] = rows[:, :nv]
            sys1[:, -1] = rows[:, -1]
            for j, r in enumerate(art_rows):
                sys1[r, nv + j] = 1.0
            c1_full = np.zeros(nv + n_art + 1)
            c1_full[nv : nv + n_art] = -1.0
            status, iters1 = _steer(T, basis, m, nv, sys1, c1_full, _iter_cap(m, nv))
            if status == 3:
                raise LpError("phase one reported unbounded; its objective is bounded by 0")
            if T[m, -1] < -FEAS_TOL:
                self.feasible = False
                self._phase1_iters = iters1
                return
        self.feasible = True
        self._phase1_iters = iters1

        # pivot leftover artificials out at zero level (largest element for
        # stability); rows with no usable element are redundant and dropped
        drop = []
        for r in range(m):
            if basis[r] >= nv:
                q = int(np.argmax(np.abs(T[r, :nv])))
                if abs(T[r, q]) <= 1e-7:
                    drop.append(r)
                else:
                    _pivot_1step(T, basis, r, q)
        keep_rows = [r for r in range(m) if r not in drop]
        self._tableau = np.ascontiguousarray(
            T[np.ix_(keep_rows, list(range(nv)) + [nv + n_art])]
        )
        self._basis = basis[keep_rows].copy()
        self._rows_norm = rows[keep_rows]  # sign-normalized constraints, for duals
        self._row_signs = signs[keep_rows]
        self._row_ids = np.array(keep_rows, dtype=np.intp)
        self._nv = nv
        self._m = len(keep_rows)

    def solve(self, objective: np.ndarray, check: bool = True) -> LpSolution:
        if not self.feasible:
            return LpSolution(
                LpStatus.INFEASIBLE, float("nan"), np.zeros(self.num_vars), self._phase1_iters
            )
        c = np.asarray(objective, dtype=np.float64)
        if c.shape != (self.num_vars,):
            raise ValueError(f"objective shape {c.shape}, expected ({self.num_vars},)")
        if not np.all(np.isfinite(c)):
            raise ValueError("non-finite coefficient in objective")
        nv, m = self._nv, self._m
        c_ext = np.zeros(nv + 1)
        c_ext[: self.num_vars] = c
        T = np.empty((m + 1, nv + 1))
        T[:m] = self._tableau
        basis = self._basis.copy()
        cb = np.where(basis < self.num_vars, c[np.minimum(basis, self.num_vars - 1)], 0.0)
        T[m] = cb @ T[:m] - c_ext
        status, iters = _steer(T, basis, m, nv, self._rows_norm, c_ext, _iter_cap(m, nv))
        iters += self._phase1_iters
        x = np.zeros(nv)
        x[basis] = T[:m, -1]
        primal = x[: self.num_vars]
        if status == 3:
            return LpSolution(LpStatus.UNBOUNDED, float("inf"), primal, iters)
        value = float(c @ primal)
        dual = self._recover_dual(basis, c_ext[:nv])
        if check:
            self._verify(primal, x, value, dual, c)
        return LpSolution(LpStatus.OPTIMAL, value, primal.copy(), iters, dual)

    def _recover_dual(self, basis: np.ndarray, c_ext: np.ndarray) -> np.ndarray:
        B = self._rows_norm[:, basis]
        try:
            y_norm = np.linalg.solve(B.T, c_ext[basis])
        except np.linalg.LinAlgError as exc:
            raise LpError(f"singular final basis: {exc}") from None
        y = np.zeros(self.num_eq + (1 if self.has_ineq else 0))
        y[self._row_ids] = y_norm * self._row_signs
        return y

    def _verify(self, primal, x_full, value, dual, c) -> None:
        if np.min(x_full) < -FEAS_TOL:
            raise LpError(f"negative variable {np.min(x_full):.3e} in optimal solution")
        resid = np.abs(self._rows_norm[:, : self._nv] @ x_full - self._rows_norm[:, -1])
        if resid.size and resid.max() > FEAS_TOL * max(1.0, np.abs(self._rows_norm[:, -1]).max()):
            raise LpError(f"feasibility residual {resid.max():.3e} exceeds tolerance")
        c_ext = np.zeros(self._nv)
        c_ext[: self.num_vars] = c
        y_norm = dual[self._row_ids] * self._row_signs
        rc = y_norm @ self._rows_norm[:, : self._nv] - c_ext
        if rc.size and rc.min() < -10 * COST_TOL:
            raise LpError(f"reduced cost {rc.min():.3e} below tolerance at optimum")

    def solve_value(self, objective: np.ndarray) -> tuple[float, np.ndarray, int]:
        """Fast path: optimal value and primal, skipping the integrity audit."""
        sol = self.solve(objective, check=False)
        if sol.status is not LpStatus.OPTIMAL:
            raise LpError(f"expected optimal status, got {sol.status.value}")
        return sol.objective_value, sol.primal, sol.iterations


def _iter_cap(m: int, nv: int) -> int:
    return 10_000 + 60 * (m + nv)


def solve_lp(problem: LpProblem) -> LpSolution:
    """Solve one standard-form problem.  Deterministic: identical problem
    bytes yield identical solution bytes."""
    prep = PreparedLp(problem.eq_lhs, problem.eq_rhs, problem.ineq_lhs, problem.ineq_rhs)
    return prep.solve(problem.objective)
