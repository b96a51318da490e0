"""
Infrastructure layer package.

This layer contains:
- The dense simplex LP solvers (primal from scratch, dual from a stored basis)
  and the branch-and-bound MILP solver
- The brute-force oracle (scipy HiGHS for its flow LPs)
- File-based run repository (CSV, JSONL, manifest)

This layer implements the interfaces defined in the application layer.
"""

from .branch_and_bound import SimplexBranchAndBoundSolver
from .oracle import brute_force_oracle
from .repositories import FileRunRepository
from .simplex import BoundedDualSimplex, DenseSimplex

__all__ = [
    "SimplexBranchAndBoundSolver", "DenseSimplex", "BoundedDualSimplex", "brute_force_oracle", "FileRunRepository",
]
