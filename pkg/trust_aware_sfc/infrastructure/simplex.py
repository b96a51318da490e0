"""
Dense tableau simplex methods for

    minimize c x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  lb <= x <= ub

with finite lower bounds.

`DenseSimplex` is a two-phase primal method that solves one LP from scratch.
`BoundedDualSimplex` fixes the rows and re-solves under changing bounds,
starting from an earlier optimal basis. Both use Dantzig-style choices and
switch to Bland's rule after a run of degenerate pivots so they cannot cycle.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from trust_aware_sfc._compat import StrEnum

import numpy as np
from scipy.linalg import lu_factor, lu_solve

logger = logging.getLogger(__name__)

PIVOT_TOLERANCE = 1e-9
COST_TOLERANCE = 1e-9
PRIMAL_TOLERANCE = 1e-9
RESIDUAL_TOLERANCE = 1e-6
SINGULAR_TOLERANCE = 1e-11
DEGENERATE_RUN_BEFORE_BLAND = 50


class LPStatus(StrEnum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"
    NUMERICAL_ERROR = "numerical_error"


@dataclass(frozen=True, slots=True)
class LPResult:
    status: LPStatus
    x: np.ndarray | None = None
    objective: float = math.inf
    iterations: int = 0
    message: str = ""

    @property
    def is_optimal(self) -> bool:
        return self.status is LPStatus.OPTIMAL


def _eliminate(t: np.ndarray, row: int, col: int) -> None:
    """Pivot `t` on (row, col), touching only the entries that change."""
    t[row] /= t[row, col]
    pivot_row = t[row]
    rows = np.flatnonzero(t[:, col])
    rows = rows[rows != row]
    if rows.size == 0:
        return
    cols = np.flatnonzero(pivot_row)
    t[np.ix_(rows, cols)] -= np.outer(t[rows, col], pivot_row[cols])


def _within_tolerance(x, a_ub, b_ub, a_eq, b_eq, lb, ub) -> bool:
    """Every original row and bound holds within RESIDUAL_TOLERANCE."""
    if a_ub.size and np.any(a_ub @ x - b_ub > RESIDUAL_TOLERANCE * np.maximum(1.0, np.abs(b_ub))):
        return False
    if a_eq.size and np.any(np.abs(a_eq @ x - b_eq) > RESIDUAL_TOLERANCE * np.maximum(1.0, np.abs(b_eq))):
        return False
    return bool(np.all(x >= lb - RESIDUAL_TOLERANCE) and np.all(x <= ub + RESIDUAL_TOLERANCE))


class _Tableau:
    """Rows 0..m-1 are constraints `[A | b]`, the last row holds reduced costs and -z."""

    def __init__(self, matrix: np.ndarray, basis: list[int]):
        self.t = matrix
        self.basis = basis
        self.iterations = 0

    @property
    def m(self) -> int:
        return self.t.shape[0] - 1

    def pivot(self, row: int, col: int) -> None:
        _eliminate(self.t, row, col)
        self.basis[row] = col
        self.iterations += 1

    def run(self, allowed: int, max_iterations: int) -> LPStatus:
        """Pivot until optimal over the first `allowed` columns."""
        degenerate = 0
        while True:
            if self.iterations >= max_iterations:
                return LPStatus.ITERATION_LIMIT
            reduced = self.t[-1, :allowed]
            bland = degenerate >= DEGENERATE_RUN_BEFORE_BLAND
            candidates = np.flatnonzero(reduced < -COST_TOLERANCE)
            if candidates.size == 0:
                return LPStatus.OPTIMAL
            col = int(candidates[0]) if bland else int(candidates[np.argmin(reduced[candidates])])

            column = self.t[:-1, col]
            rhs = self.t[:-1, -1]
            rows = np.flatnonzero(column > PIVOT_TOLERANCE)
            if rows.size == 0:
                return LPStatus.UNBOUNDED
            ratios = rhs[rows] / column[rows]
            best = ratios.min()
            ties = rows[ratios <= best + PIVOT_TOLERANCE]
            row = int(min(ties, key=lambda r: self.basis[r]))
            degenerate = degenerate + 1 if best <= PIVOT_TOLERANCE else 0
            self.pivot(row, col)


class DenseSimplex:
    def __init__(self, max_iterations: int = 50_000):
        self.max_iterations = max_iterations

    def solve(
        self,
        c: np.ndarray,
        a_ub: np.ndarray | None = None,
        b_ub: np.ndarray | None = None,
        a_eq: np.ndarray | None = None,
        b_eq: np.ndarray | None = None,
        lb: np.ndarray | None = None,
        ub: np.ndarray | None = None,
    ) -> LPResult:
        """
        Solve the LP and verify the answer against the original rows.

        Returns:
            LPResult; NUMERICAL_ERROR when the final point fails the residual check
        """
        c = np.asarray(c, dtype=float)
        n = c.size
        a_ub = np.zeros((0, n)) if a_ub is None else np.asarray(a_ub, dtype=float).reshape(-1, n)
        b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float)
        a_eq = np.zeros((0, n)) if a_eq is None else np.asarray(a_eq, dtype=float).reshape(-1, n)
        b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float)
        lb = np.zeros(n) if lb is None else np.asarray(lb, dtype=float)
        ub = np.full(n, math.inf) if ub is None else np.asarray(ub, dtype=float)
        if not np.all(np.isfinite(lb)):
            raise ValueError("DenseSimplex requires finite lower bounds")
        if np.any(ub < lb):
            return LPResult(LPStatus.INFEASIBLE, message="empty variable bounds")

        # Eliminate fixed variables and shift the rest to y = x - lb >= 0.
        fixed = ub == lb
        free = np.flatnonzero(~fixed)
        b_ub_shift = b_ub - a_ub @ lb
        b_eq_shift = b_eq - a_eq @ lb
        constant = float(c @ lb)

        a_le = a_ub[:, free]
        bounded = [k for k, j in enumerate(free) if math.isfinite(ub[j])]
        if bounded:
            bound_rows = np.zeros((len(bounded), free.size))
            bound_rows[np.arange(len(bounded)), bounded] = 1.0
            a_le = np.vstack([a_le, bound_rows])
            b_ub_shift = np.concatenate([b_ub_shift, ub[free[bounded]] - lb[free[bounded]]])

        y, iterations, status = self._solve_standard(c[free], a_le, b_ub_shift, a_eq[:, free], b_eq_shift)
        if status is not LPStatus.OPTIMAL:
            return LPResult(status, iterations=iterations)

        x = lb.copy()
        x[free] += y
        if not _within_tolerance(x, a_ub, b_ub, a_eq, b_eq, lb, ub):
            logger.warning("Simplex residual check failed after %d iterations", iterations)
            return LPResult(LPStatus.NUMERICAL_ERROR, iterations=iterations, message="residual check failed")
        x = np.clip(x, lb, ub)
        return LPResult(LPStatus.OPTIMAL, x=x, objective=float(c @ x), iterations=iterations)

    def _solve_standard(
        self, c: np.ndarray, a_le: np.ndarray, b_le: np.ndarray, a_eq: np.ndarray, b_eq: np.ndarray
    ) -> tuple[np.ndarray, int, LPStatus]:
        n = c.size
        m_le, m_eq = a_le.shape[0], a_eq.shape[0]
        m = m_le + m_eq
        if m == 0:
            if np.any(c < -COST_TOLERANCE):
                return np.zeros(n), 0, LPStatus.UNBOUNDED
            return np.zeros(n), 0, LPStatus.OPTIMAL

        # Columns: structural n, slacks m_le, artificials m.
        a = np.zeros((m, n + m_le))
        a[:m_le, :n] = a_le
        a[:m_le, n:] = np.eye(m_le)
        a[m_le:, :n] = a_eq
        b = np.concatenate([b_le, b_eq])
        negative = b < 0
        a[negative] *= -1.0
        b = np.abs(b)

        needs_artificial = [r for r in range(m) if r >= m_le or negative[r]]
        width = n + m_le + len(needs_artificial)
        t = np.zeros((m + 1, width + 1))
        t[:m, : n + m_le] = a
        t[:m, -1] = b
        basis = [n + r for r in range(m_le)] + [0] * m_eq
        for k, r in enumerate(needs_artificial):
            col = n + m_le + k
            t[r, col] = 1.0
            basis[r] = col
        tableau = _Tableau(t, basis)

        if needs_artificial:
            t[-1, :] = 0.0
            t[-1, n + m_le : width] = 1.0
            for r in needs_artificial:
                t[-1] -= t[r]
            status = tableau.run(width, self.max_iterations)
            if status is not LPStatus.OPTIMAL:
                return np.zeros(n), tableau.iterations, status
            if -t[-1, -1] > RESIDUAL_TOLERANCE * max(1.0, float(b.max(initial=0.0))):
                return np.zeros(n), tableau.iterations, LPStatus.INFEASIBLE
            tableau = self._drop_artificials(tableau, n + m_le)
            t = tableau.t

        t[-1, :] = 0.0
        t[-1, :n] = c
        for r, col in enumerate(tableau.basis):
            if t[-1, col] != 0.0:
                t[-1] -= t[-1, col] * t[r]
        status = tableau.run(n + m_le, self.max_iterations)
        y = np.zeros(n + m_le)
        for r, col in enumerate(tableau.basis):
            y[col] = t[r, -1]
        return y[:n], tableau.iterations, status

    @staticmethod
    def _drop_artificials(tableau: _Tableau, real_columns: int) -> _Tableau:
        """Pivot artificial columns out of the basis, deleting redundant rows, then drop them."""
        t = tableau.t
        keep: list[int] = []
        for r in range(tableau.m):
            if tableau.basis[r] < real_columns:
                keep.append(r)
                continue
            candidates = np.flatnonzero(np.abs(t[r, :real_columns]) > PIVOT_TOLERANCE)
            if candidates.size == 0:
                continue
            tableau.pivot(r, int(candidates[0]))
            keep.append(r)
        rows = keep + [tableau.m]
        reduced = np.hstack([t[rows][:, :real_columns], t[rows][:, -1:]])
        result = _Tableau(reduced, [tableau.basis[r] for r in keep])
        result.iterations = tableau.iterations
        return result


@dataclass(frozen=True, slots=True)
class Basis:
    """Basic column of every row, plus the nonbasic columns resting at their upper bound."""
    columns: tuple[int, ...]
    at_upper: frozenset[int] = frozenset()


class _DualState:
    """Tableau `B^-1 [A | I]`, primal values of every column and reduced costs."""

    def __init__(
        self,
        t: np.ndarray,
        columns: np.ndarray,
        at_upper: np.ndarray,
        x: np.ndarray,
        reduced: np.ndarray,
        lower: np.ndarray,
        upper: np.ndarray,
    ):
        self.t = t
        self.columns = columns
        self.is_basic = np.zeros(t.shape[1], dtype=bool)
        self.is_basic[columns] = True
        self.at_upper = at_upper
        self.x = x
        self.reduced = reduced
        self.lower = lower
        self.upper = upper
        self.iterations = 0

    def _leaving_row(self, bland: bool) -> int | None:
        values = self.x[self.columns]
        low, high = self.lower[self.columns], self.upper[self.columns]
        below, above = low - values, values - high
        violation = np.maximum(below, above)
        bound = np.where(below >= above, low, high)
        rows = np.flatnonzero(violation > PRIMAL_TOLERANCE * np.maximum(1.0, np.abs(bound)))
        if rows.size == 0:
            return None
        if bland:
            return int(rows[np.argmin(self.columns[rows])])
        return int(rows[np.argmax(violation[rows])])

    def run(self, max_iterations: int) -> LPStatus:
        """Dual pivots until every basic value is within its bounds."""
        degenerate = 0
        while True:
            if self.iterations >= max_iterations:
                return LPStatus.ITERATION_LIMIT
            bland = degenerate >= DEGENERATE_RUN_BEFORE_BLAND
            row = self._leaving_row(bland)
            if row is None:
                return LPStatus.OPTIMAL

            leaving = int(self.columns[row])
            increase = self.x[leaving] < self.lower[leaving]
            target = self.lower[leaving] if increase else self.upper[leaving]
            entries = self.t[row]
            movable = ~self.is_basic & (self.upper > self.lower)
            rising, falling = entries > PIVOT_TOLERANCE, entries < -PIVOT_TOLERANCE
            if increase:
                eligible = movable & ((~self.at_upper & falling) | (self.at_upper & rising))
            else:
                eligible = movable & ((~self.at_upper & rising) | (self.at_upper & falling))
            candidates = np.flatnonzero(eligible)
            if candidates.size == 0:
                return LPStatus.INFEASIBLE

            ratios = np.abs(self.reduced[candidates]) / np.abs(entries[candidates])
            best = ratios.min()
            ties = candidates[ratios <= best + COST_TOLERANCE]
            entering = int(ties[0]) if bland else int(ties[np.argmax(np.abs(entries[ties]))])
            degenerate = degenerate + 1 if best <= COST_TOLERANCE else 0
            self.pivot(row, entering, target)

    def pivot(self, row: int, entering: int, target: float) -> None:
        t = self.t
        leaving = int(self.columns[row])
        step = (self.x[leaving] - target) / t[row, entering]
        self.x[self.columns] -= t[:, entering] * step
        self.x[entering] += step
        self.x[leaving] = target
        self.reduced -= (self.reduced[entering] / t[row, entering]) * t[row]
        self.reduced[entering] = 0.0
        _eliminate(t, row, entering)

        self.columns[row] = entering
        self.is_basic[leaving], self.is_basic[entering] = False, True
        self.at_upper[entering] = False
        self.at_upper[leaving] = target == self.upper[leaving] and target != self.lower[leaving]
        self.iterations += 1

    def basis(self) -> Basis:
        resting = np.flatnonzero(self.at_upper & ~self.is_basic)
        return Basis(tuple(int(j) for j in self.columns), frozenset(int(j) for j in resting))


class BoundedDualSimplex:
    """
    Dual simplex over one fixed row system whose variable bounds change
    between solves, as they do from one branch-and-bound node to the next.

    Rows are `A_ub x + s = b_ub` and `A_eq x + a = b_eq` with slacks in
    [0, inf) and artificials fixed at 0, so the slack/artificial identity is
    always a basis. Bounds are kept implicit: nonbasic columns rest at one of
    their bounds. A basis that was optimal stays dual feasible after bounds
    change, so a re-solve from it only restores primal feasibility.

    `solve` reports NUMERICAL_ERROR or ITERATION_LIMIT when it cannot vouch
    for its answer; callers then fall back to DenseSimplex.
    """

    def __init__(
        self,
        c: np.ndarray,
        a_ub: np.ndarray,
        b_ub: np.ndarray,
        a_eq: np.ndarray,
        b_eq: np.ndarray,
        max_iterations: int = 20_000,
    ):
        self.c = np.asarray(c, dtype=float)
        self.n = self.c.size
        self.a_ub = np.asarray(a_ub, dtype=float).reshape(-1, self.n)
        self.b_ub = np.asarray(b_ub, dtype=float)
        self.a_eq = np.asarray(a_eq, dtype=float).reshape(-1, self.n)
        self.b_eq = np.asarray(b_eq, dtype=float)
        self.max_iterations = max_iterations

        m_ub, m_eq = self.a_ub.shape[0], self.a_eq.shape[0]
        self.m = m_ub + m_eq
        self.matrix = np.hstack([np.vstack([self.a_ub, self.a_eq]), np.eye(self.m)])
        self.rhs = np.concatenate([self.b_ub, self.b_eq])
        self.cost = np.concatenate([self.c, np.zeros(self.m)])
        self.row_lower = np.zeros(self.m)
        self.row_upper = np.concatenate([np.full(m_ub, math.inf), np.zeros(m_eq)])
        self.slack_basis = Basis(tuple(range(self.n, self.n + self.m)))
        self._last_factor: tuple[tuple[int, ...], tuple, np.ndarray, np.ndarray] | None = None

    def _factor(self, basis: Basis, lower: np.ndarray, upper: np.ndarray) -> _DualState | None:
        """Tableau for `basis`, with nonbasic columns flipped to the bound their reduced cost needs."""
        columns = np.array(basis.columns, dtype=int)
        if columns.size != self.m:
            return None
        # Sibling nodes start from the same parent basis; reuse its tableau.
        if self._last_factor is not None and self._last_factor[0] == basis.columns:
            _, factors, t, reduced = self._last_factor
            t, reduced = t.copy(), reduced.copy()
        else:
            factors = lu_factor(self.matrix[:, columns], check_finite=False)
            diagonal = np.abs(np.diag(factors[0]))
            if diagonal.min() <= SINGULAR_TOLERANCE * max(1.0, diagonal.max()):
                return None
            t = lu_solve(factors, self.matrix, check_finite=False)
            reduced = self.cost - self.cost[columns] @ t
            reduced[columns] = 0.0
            self._last_factor = (basis.columns, factors, t.copy(), reduced.copy())

        width = self.matrix.shape[1]
        is_basic = np.zeros(width, dtype=bool)
        is_basic[columns] = True
        at_upper = np.zeros(width, dtype=bool)
        resting = [j for j in basis.at_upper if not is_basic[j] and math.isfinite(upper[j])]
        at_upper[resting] = True

        movable = ~is_basic & (upper > lower)
        wrong_at_lower = movable & ~at_upper & (reduced < -COST_TOLERANCE)
        if np.any(wrong_at_lower & ~np.isfinite(upper)):
            return None
        at_upper |= wrong_at_lower
        at_upper &= ~(movable & (reduced > COST_TOLERANCE))

        x = np.where(at_upper, upper, lower)
        x[columns] = 0.0
        x[columns] = lu_solve(factors, self.rhs - self.matrix @ x, check_finite=False)
        return _DualState(t, columns, at_upper, x, reduced, lower, upper)

    def solve(self, lb: np.ndarray, ub: np.ndarray, basis: Basis | None = None) -> tuple[LPResult, Basis | None]:
        """
        Solve under bounds `lb <= x <= ub`, starting from `basis` when given.

        Returns:
            The LPResult and, when optimal, the basis to start the next re-solve from
        """
        lb = np.asarray(lb, dtype=float)
        ub = np.asarray(ub, dtype=float)
        if not np.all(np.isfinite(lb)):
            raise ValueError("BoundedDualSimplex requires finite lower bounds")
        if np.any(ub < lb):
            return LPResult(LPStatus.INFEASIBLE, message="empty variable bounds"), None
        if self.m == 0:
            return LPResult(LPStatus.NUMERICAL_ERROR, message="no rows"), None

        lower = np.concatenate([lb, self.row_lower])
        upper = np.concatenate([ub, self.row_upper])
        state = self._factor(basis, lower, upper) if basis is not None else None
        if state is None:
            state = self._factor(self.slack_basis, lower, upper)
        if state is None:
            return LPResult(LPStatus.NUMERICAL_ERROR, message="no dual feasible starting basis"), None

        status = state.run(self.max_iterations)
        if status is not LPStatus.OPTIMAL:
            return LPResult(status, iterations=state.iterations), None

        x = state.x[: self.n]
        if not _within_tolerance(x, self.a_ub, self.b_ub, self.a_eq, self.b_eq, lb, ub):
            logger.debug("Dual re-solve failed the residual check after %d iterations", state.iterations)
            failed = LPResult(LPStatus.NUMERICAL_ERROR, iterations=state.iterations, message="residual check failed")
            return failed, None
        x = np.clip(x, lb, ub)
        return LPResult(LPStatus.OPTIMAL, x=x, objective=float(self.c @ x), iterations=state.iterations), state.basis()
