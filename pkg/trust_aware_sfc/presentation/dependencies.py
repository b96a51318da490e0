import os

from fastapi import Depends, Request

from trust_aware_sfc.application.services import EmbeddingService, ExperimentService
from trust_aware_sfc.domain.models import SolveBudget
from trust_aware_sfc.infrastructure.branch_and_bound import SimplexBranchAndBoundSolver
from trust_aware_sfc.infrastructure.oracle import brute_force_oracle
from trust_aware_sfc.infrastructure.repositories import FileRunRepository


class DependencyContainer:
    """Dependency injection container for managing application dependencies"""

    def __init__(
        self,
        solver_time_limit: float | None = None,
        node_limit: int | None = None,
        output_dir: str | None = None,
        trace: bool = False,
    ):
        if solver_time_limit is None:
            solver_time_limit = float(os.getenv("TASFC_SOLVER_TIME_LIMIT", "10"))
        if node_limit is None:
            node_limit = int(os.getenv("TASFC_NODE_LIMIT", "100000"))
        self.budget = SolveBudget(time_limit=solver_time_limit, node_limit=node_limit)
        self.output_dir = output_dir or os.getenv("TASFC_OUTPUT_DIR", "results")
        self.trace = trace

    def get_solver(self) -> SimplexBranchAndBoundSolver:
        """Get a branch-and-bound solver with the configured budget"""
        return SimplexBranchAndBoundSolver(self.budget, trace=self.trace)

    def get_embedding_service(self) -> EmbeddingService:
        """Get embedding service instance"""
        return EmbeddingService(self.get_solver(), oracle=brute_force_oracle)

    def get_run_repository(self, output_dir: str | None = None) -> FileRunRepository:
        """Get a result writer for one output directory"""
        return FileRunRepository(output_dir or self.output_dir)

    def get_experiment_service(self, output_dir: str | None = None) -> ExperimentService:
        """Get experiment service instance writing into `output_dir`"""
        # The class itself is the factory so worker processes can unpickle it.
        return ExperimentService(SimplexBranchAndBoundSolver, self.get_run_repository(output_dir))


async def get_container(request: Request) -> DependencyContainer:
    """Get dependency container from app state"""
    return request.app.state.container


async def get_embedding_service(
    container: DependencyContainer = Depends(get_container),
) -> EmbeddingService:
    """Embedding service dependency"""
    return container.get_embedding_service()
