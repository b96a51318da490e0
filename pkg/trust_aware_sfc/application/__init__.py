"""
Application layer package.

This layer contains:
- Path space construction and MILP formulations
- Solution validation and resource bookkeeping
- Workload generation and the admission simulator
- Service classes (use cases) and repository interfaces (protocols)

The application layer depends on the domain only; solvers and file
storage are injected through the protocols in repositories.py.
"""

from .repositories import IModelSolver, IRunRepository
from .services import EmbeddingService, EmbedOptions, ExperimentService, RunManifest

__all__ = [
    "EmbeddingService", "EmbedOptions", "ExperimentService", "RunManifest",
    "IModelSolver", "IRunRepository",
]
