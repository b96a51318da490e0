from __future__ import annotations

from typing import TYPE_CHECKING, Protocol

from trust_aware_sfc.domain.models import SolveBudget, SolveResult

if TYPE_CHECKING:
    from trust_aware_sfc.application.formulation import EmbeddingModel
    from trust_aware_sfc.application.services import RunManifest
    from trust_aware_sfc.application.simulator import ExperimentReport


class IModelSolver(Protocol):
    def solve_lp(self, model: EmbeddingModel) -> SolveResult: ...
    def solve_milp(self, model: EmbeddingModel, budget: SolveBudget | None = None) -> SolveResult: ...


class IRunRepository(Protocol):
    def save_report(self, report: ExperimentReport) -> dict[str, str]: ...
    def save_manifest(self, manifest: RunManifest) -> None: ...
