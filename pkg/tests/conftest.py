import pytest

from trust_aware_sfc.application.workload import Distributions, ExperimentConfig
from trust_aware_sfc.domain.models import SolveBudget
from trust_aware_sfc.infrastructure.branch_and_bound import SimplexBranchAndBoundSolver
from tests.helpers import line_network, mesh_network


@pytest.fixture
def solver() -> SimplexBranchAndBoundSolver:
    return SimplexBranchAndBoundSolver(SolveBudget(time_limit=60.0, node_limit=100_000))


@pytest.fixture
def line():
    return line_network()


@pytest.fixture
def mesh():
    return mesh_network()


@pytest.fixture
def small_config() -> ExperimentConfig:
    """One-pod zone and a short stream of 2-3 VNF chains."""
    return ExperimentConfig(
        seed=7,
        pods=1,
        distributions=Distributions(vnf_count=(2, 3)),
        k=4,
        request_count=15,
        mean_interarrival=1.0,
        mean_holding=4.0,
        window=5.0,
        solver_time_limit=60.0,
    )
