"""
Best-first branch-and-bound over the placement binaries.

Node LPs are re-solved with BoundedDualSimplex from the parent's optimal
basis; DenseSimplex solves them from scratch whenever the dual re-solve
cannot vouch for its answer.
"""

from __future__ import annotations

import heapq
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from trust_aware_sfc.application.formulation import EmbeddingModel, ModelArrays
from trust_aware_sfc.domain.models import (
    SolveBudget,
    SolveResult,
    SolveStats,
    SolveStatus,
    StructuralError,
)
from trust_aware_sfc.infrastructure.simplex import Basis, BoundedDualSimplex, DenseSimplex, LPResult, LPStatus

logger = logging.getLogger(__name__)

INTEGRALITY_TOLERANCE = 1e-6
PRUNE_TOLERANCE = 1e-9
BOUND_TOLERANCE = 1e-7

Fixings = tuple[tuple[int, float], ...]


@dataclass(order=True)
class _Node:
    bound: float
    seq: int
    depth: int = field(compare=False)
    fixings: Fixings = field(compare=False)
    x: np.ndarray = field(compare=False)
    basis: Basis | None = field(default=None, compare=False)


@dataclass
class _Search:
    arrays: ModelArrays
    engine: BoundedDualSimplex | None = None
    nodes_explored: int = 0
    lp_iterations: int = 0
    seq: int = 0
    incumbent: float = math.inf
    incumbent_x: np.ndarray | None = None
    failure: str = ""
    open_nodes: list[_Node] = field(default_factory=list)

    def offer(self, objective: float, x: np.ndarray) -> None:
        if objective < self.incumbent:
            self.incumbent, self.incumbent_x = objective, x

    def push(self, bound: float, depth: int, fixings: Fixings, x: np.ndarray, basis: Basis | None) -> None:
        self.seq += 1
        heapq.heappush(self.open_nodes, _Node(bound, self.seq, depth, fixings, x, basis))

    @property
    def best_bound(self) -> float:
        return min((node.bound for node in self.open_nodes), default=self.incumbent)


class SimplexBranchAndBoundSolver:
    """
    Exact MILP solver for EmbeddingModel instances.

    Only the placement binaries are branched on; once they are integral the
    flow LP is re-solved with the binaries fixed, which makes the flows exact.
    Nodes are explored best-bound first, the most fractional binary is
    branched (lowest index on ties), and the search stops when the best open
    bound cannot improve the incumbent. With `warm_start` off every node LP
    is solved from scratch.
    """

    def __init__(
        self,
        budget: SolveBudget | None = None,
        simplex: DenseSimplex | None = None,
        trace: bool = False,
        clock: Callable[[], float] = time.perf_counter,
        warm_start: bool = True,
    ):
        self.budget = budget or SolveBudget()
        self.simplex = simplex or DenseSimplex()
        self.trace = trace
        self._clock = clock
        self.warm_start = warm_start

    @staticmethod
    def _bounds(arrays: ModelArrays, fixings: Fixings) -> tuple[np.ndarray, np.ndarray]:
        lb, ub = arrays.lb.copy(), arrays.ub.copy()
        for index, value in fixings:
            lb[index] = ub[index] = value
        return lb, ub

    def _solve_relaxation(self, arrays: ModelArrays, fixings: Fixings) -> LPResult:
        lb, ub = self._bounds(arrays, fixings)
        return self.simplex.solve(arrays.c, arrays.a_ub, arrays.b_ub, arrays.a_eq, arrays.b_eq, lb, ub)

    def _relax(self, search: _Search, fixings: Fixings, basis: Basis | None) -> tuple[LPResult, Basis | None]:
        if search.engine is not None:
            lp, next_basis = search.engine.solve(*self._bounds(search.arrays, fixings), basis)
            if lp.status in (LPStatus.OPTIMAL, LPStatus.INFEASIBLE):
                return lp, next_basis
            logger.debug("Dual re-solve returned %s, solving from scratch", lp.status)
            search.lp_iterations += lp.iterations
        return self._solve_relaxation(search.arrays, fixings), None

    @staticmethod
    def _most_fractional(model: EmbeddingModel, x: np.ndarray) -> int | None:
        best_index, best_distance = None, INTEGRALITY_TOLERANCE
        for index in model.binary_indices:
            distance = min(x[index], 1.0 - x[index])
            if distance > best_distance:
                best_index, best_distance = index, distance
        return best_index

    @staticmethod
    def _rounded(model: EmbeddingModel, x: np.ndarray) -> np.ndarray:
        rounded = x.copy()
        for index in model.binary_indices:
            rounded[index] = float(round(x[index]))
        return rounded

    def solve_lp(self, model: EmbeddingModel) -> SolveResult:
        """
        Solve the LP relaxation (binaries in [0, 1]).

        A solution is attached only when the relaxation is integral in the binaries.
        """
        started = self._clock()
        lp = self._solve_relaxation(model.to_arrays(), ())
        stats = SolveStats(nodes_explored=1, lp_iterations=lp.iterations, wall_time=self._clock() - started)
        if lp.status is LPStatus.INFEASIBLE:
            return SolveResult(SolveStatus.INFEASIBLE, stats=stats)
        if not lp.is_optimal:
            return SolveResult(SolveStatus.ERROR, stats=stats, message=f"LP relaxation: {lp.status}")
        solution = None
        if self._most_fractional(model, lp.x) is None:
            solution = model.extract_solution(self._rounded(model, lp.x))
        return SolveResult(SolveStatus.OPTIMAL, objective=lp.objective, solution=solution, stats=stats)

    def _evaluate(
        self,
        model: EmbeddingModel,
        search: _Search,
        fixings: Fixings,
        depth: int,
        parent_bound: float,
        parent_basis: Basis | None = None,
    ) -> None:
        lp, basis = self._relax(search, fixings, parent_basis)
        search.nodes_explored += 1
        search.lp_iterations += lp.iterations
        if lp.status is LPStatus.INFEASIBLE:
            return
        if not lp.is_optimal:
            search.failure = search.failure or f"LP at depth {depth}: {lp.status}"
            return
        if lp.objective < parent_bound - BOUND_TOLERANCE * max(1.0, abs(parent_bound)):
            logger.warning("LP bound %.9g below parent bound %.9g at depth %d", lp.objective, parent_bound, depth)

        branch = self._most_fractional(model, lp.x)
        if self.trace:
            logger.debug(
                "bb node=%d bound=%.6f depth=%d branch=%s",
                search.nodes_explored, lp.objective, depth,
                model.variables[branch].name if branch is not None else "-",
            )
        if lp.objective >= search.incumbent - PRUNE_TOLERANCE:
            return
        if branch is not None:
            search.push(lp.objective, depth, fixings, lp.x, basis)
            return

        all_fixed = tuple((index, float(round(lp.x[index]))) for index in model.binary_indices)
        flows, _ = self._relax(search, all_fixed, basis)
        search.lp_iterations += flows.iterations
        if flows.is_optimal:
            search.offer(flows.objective, flows.x)
        else:
            logger.debug("Flow re-solve at depth %d returned %s", depth, flows.status)

    def solve_milp(self, model: EmbeddingModel, budget: SolveBudget | None = None) -> SolveResult:
        """
        Solve the MILP to global optimality within the budget.

        Args:
            model: Model to solve
            budget: Time and node limits; defaults to the solver's budget

        Returns:
            SolveResult with status optimal, infeasible, timeout (incumbent
            objective, gap and incumbent embedding, no solution) or error
        """
        budget = budget or self.budget
        started = self._clock()
        if model.infeasibility is not None:
            return SolveResult(
                SolveStatus.INFEASIBLE,
                binding_family=model.infeasibility.family,
                message=model.infeasibility.detail,
                stats=SolveStats(wall_time=self._clock() - started),
            )

        arrays = model.to_arrays()
        engine = None
        if self.warm_start:
            engine = BoundedDualSimplex(arrays.c, arrays.a_ub, arrays.b_ub, arrays.a_eq, arrays.b_eq)
        search = _Search(arrays=arrays, engine=engine)
        self._evaluate(model, search, (), 0, -math.inf)
        timed_out = False
        while search.open_nodes:
            node = heapq.heappop(search.open_nodes)
            if node.bound >= search.incumbent - PRUNE_TOLERANCE:
                search.open_nodes.clear()
                break
            if self._clock() - started > budget.time_limit or search.nodes_explored >= budget.node_limit:
                heapq.heappush(search.open_nodes, node)
                timed_out = True
                break
            branch = self._most_fractional(model, node.x)
            for value in (0.0, 1.0):
                fixings = node.fixings + ((branch, value),)
                self._evaluate(model, search, fixings, node.depth + 1, node.bound, node.basis)

        stats = SolveStats(
            nodes_explored=search.nodes_explored,
            lp_iterations=search.lp_iterations,
            wall_time=self._clock() - started,
        )
        if timed_out:
            gap = None
            if math.isfinite(search.incumbent):
                gap = (search.incumbent - search.best_bound) / max(1.0, abs(search.incumbent))
            logger.info("Budget exhausted after %d nodes, incumbent %s", search.nodes_explored, search.incumbent)
            incumbent = None
            if search.incumbent_x is not None:
                try:
                    incumbent = model.extract_solution(search.incumbent_x)
                except StructuralError as exc:
                    logger.warning("Incumbent could not be extracted: %s", exc)
            return SolveResult(
                SolveStatus.TIMEOUT, objective=search.incumbent, stats=stats, gap=gap, incumbent=incumbent
            )
        if search.failure:
            # A subtree was never bounded, so neither optimality nor infeasibility is proven.
            return SolveResult(SolveStatus.ERROR, objective=search.incumbent, stats=stats, message=search.failure)
        if search.incumbent_x is None:
            return SolveResult(SolveStatus.INFEASIBLE, stats=stats)
        try:
            solution = model.extract_solution(search.incumbent_x)
        except StructuralError as exc:
            return SolveResult(SolveStatus.ERROR, stats=stats, message=str(exc))
        return SolveResult(
            SolveStatus.OPTIMAL, objective=search.incumbent, solution=solution, stats=stats, gap=0.0
        )
