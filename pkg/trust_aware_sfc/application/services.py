from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

from trust_aware_sfc import __version__
from trust_aware_sfc.application.formulation import EmbeddingModel, build_link_based_model, build_pb_model
from trust_aware_sfc.application.pathspace import PathTrustTable, build_path_universe
from trust_aware_sfc.application.repositories import IModelSolver, IRunRepository
from trust_aware_sfc.application.simulator import (
    ExperimentReport,
    SolverFactory,
    run_experiment_A,
    run_experiment_B,
    size_sensitivity,
)
from trust_aware_sfc.application.validation import validate_solution
from trust_aware_sfc.application.workload import ZONE_WIRING, ExperimentConfig
from trust_aware_sfc.domain.models import (
    AugmentedPath,
    Commodity,
    PathTrustPolicy,
    ServiceRequest,
    SolveBudget,
    SolveResult,
    SubstrateNetwork,
    ValidationReport,
    Variant,
)

logger = logging.getLogger(__name__)

Oracle = Callable[..., SolveResult]


@dataclass(frozen=True, slots=True)
class EmbedOptions:
    k: int | None = 12
    variant: Variant = Variant.PB_SCE
    gamma: float = 1.0
    trust_policy: PathTrustPolicy = PathTrustPolicy.MIN_LINK
    link_based: bool = False
    couple_destination: bool = True
    big_m_scale: float = 1.0

    def __post_init__(self) -> None:
        if self.k is not None and self.k < 1:
            raise ValueError(f"k must be at least 1, got {self.k}")
        if self.link_based and self.variant.path_trust:
            raise ValueError("The link-based model has no path-trust variant")


@dataclass(frozen=True)
class EmbeddingOutcome:
    result: SolveResult
    model: EmbeddingModel
    validation: ValidationReport | None = None
    oracle: SolveResult | None = None

    @property
    def oracle_agrees(self) -> bool | None:
        if self.oracle is None:
            return None
        if self.result.status != self.oracle.status:
            return False
        if not self.result.is_optimal:
            return True
        return abs(self.result.objective - self.oracle.objective) <= 1e-6 * max(1.0, abs(self.oracle.objective))


class EmbeddingService:
    """
    Single-request embedding use cases.

    This service is responsible for:
    - Building the path universe and the MILP for one request
    - Solving it and re-validating the solution against the raw networks
    - Optionally cross-checking the result with the brute-force oracle
    - Listing the candidate paths of one commodity

    Business Rules:
    - Assigned path trust needs a table; a closed table must cover every path
    - Path trust only restricts the PB_TASCE variant
    """

    def __init__(self, solver: IModelSolver, oracle: Oracle | None = None):
        self._solver = solver
        self._oracle = oracle

    @staticmethod
    def _policy(options: EmbedOptions, table: PathTrustTable | None, evaluate: bool) -> PathTrustPolicy | None:
        if not evaluate:
            return None
        if options.trust_policy is PathTrustPolicy.ASSIGNED and table is None:
            raise ValueError("Assigned path trust needs a path-trust table")
        return options.trust_policy

    def build_model(
        self,
        net: SubstrateNetwork,
        req: ServiceRequest,
        options: EmbedOptions,
        table: PathTrustTable | None = None,
    ) -> EmbeddingModel:
        """
        Build the MILP for `req` on the current residuals of `net`.

        Raises:
            ValueError: If options are inconsistent or trust data is missing
        """
        if options.link_based:
            return build_link_based_model(net, req, options.variant, options.gamma)
        policy = self._policy(options, table, options.variant.path_trust)
        universe = build_path_universe(net, req, options.k, options.variant.node_trust, policy, table)
        return build_pb_model(
            net, req, universe, options.variant, options.gamma, options.big_m_scale, options.couple_destination
        )

    def embed(
        self,
        net: SubstrateNetwork,
        req: ServiceRequest,
        options: EmbedOptions,
        table: PathTrustTable | None = None,
        budget: SolveBudget | None = None,
        with_oracle: bool = False,
    ) -> EmbeddingOutcome:
        """
        Embed one request.

        Args:
            net: Substrate network
            req: Request to embed
            options: Method, variant and objective settings
            table: Path-trust table for the assigned policy
            budget: Solver budget override
            with_oracle: Also solve with the brute-force oracle

        Returns:
            EmbeddingOutcome with the solver result, the model and, when
            optimal, the validation report of the solution

        Raises:
            ValueError: If inputs are inconsistent, or the oracle was
                requested but is unavailable or refuses the instance
        """
        model = self.build_model(net, req, options, table)
        result = self._solver.solve_milp(model, budget)
        validation = None
        if result.solution is not None:
            validation = validate_solution(net, req, result.solution, options.variant.trust_mode)
            if not validation.is_valid:
                logger.error("Solution of %s fails validation: %s", req.id, validation.violations)
        logger.info("Embedding %s: %s (objective %s)", req.id, result.status.value, result.objective)

        oracle_result = None
        if with_oracle:
            if self._oracle is None:
                raise ValueError("No oracle configured")
            oracle_result = self._oracle(
                net, req, options.variant, options.trust_policy, table, options.gamma
            )
        return EmbeddingOutcome(result, model, validation, oracle_result)

    def list_paths(
        self,
        net: SubstrateNetwork,
        req: ServiceRequest,
        commodity: Commodity,
        options: EmbedOptions,
        table: PathTrustTable | None = None,
    ) -> list[AugmentedPath]:
        """
        Candidate paths of one commodity, with trust under the active policy.

        Raises:
            StructuralError: If the commodity is not a virtual link of the request
        """
        req.vlink(commodity)
        policy = self._policy(options, table, evaluate=True)
        universe = build_path_universe(net, req, options.k, options.variant.node_trust, policy, table)
        return universe[commodity]


@dataclass(frozen=True)
class RunManifest:
    """Everything needed to reproduce an experiment run, plus checksums of what it wrote."""
    experiment: str
    config: dict
    seed: int
    methods: list[str]
    output_dir: str
    code_version: str = __version__
    zone_wiring: str = ZONE_WIRING
    artifacts: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "seed": self.seed,
            "methods": self.methods,
            "output_dir": self.output_dir,
            "code_version": self.code_version,
            "zone_wiring": self.zone_wiring,
            "config": self.config,
            "artifacts": dict(sorted(self.artifacts.items())),
        }


class ExperimentService:
    """
    Experiment orchestration.

    This service is responsible for:
    - Running experiment A (k sweep against the link-based optimum),
      experiment B (trust ablation) or a size-sensitivity run
    - Persisting every figure-backing table and the run manifest

    Business Rules:
    - All methods of one experiment see the identical request stream
    - A size-sensitivity run needs a fixed VNF count within the configured bounds
    """

    EXPERIMENTS = ("A", "B", "size")

    def __init__(self, solver_factory: SolverFactory, runs: IRunRepository):
        self._solver_factory = solver_factory
        self._runs = runs

    def run(
        self,
        cfg: ExperimentConfig,
        experiment: str,
        output_dir: str,
        fixed_vnf_count: int | None = None,
    ) -> tuple[ExperimentReport, RunManifest]:
        """
        Run an experiment and persist its results.

        Raises:
            ValueError: If the experiment is unknown or a size run lacks a VNF count
        """
        if experiment not in self.EXPERIMENTS:
            raise ValueError(f"Unknown experiment {experiment!r}; choose from {', '.join(self.EXPERIMENTS)}")
        logger.info("Running experiment %s with seed %d", experiment, cfg.seed)
        if experiment == "A":
            report = run_experiment_A(cfg, self._solver_factory)
        elif experiment == "B":
            report = run_experiment_B(cfg, self._solver_factory)
        else:
            count = fixed_vnf_count if fixed_vnf_count is not None else cfg.fixed_vnf_count
            if count is None:
                raise ValueError("A size-sensitivity run needs a fixed VNF count")
            report = size_sensitivity(cfg, count, self._solver_factory)

        artifacts = self._runs.save_report(report)
        manifest = RunManifest(
            experiment=experiment,
            config=cfg.model_dump(mode="json"),
            seed=cfg.seed,
            methods=report.labels,
            output_dir=output_dir,
            artifacts=artifacts,
        )
        self._runs.save_manifest(manifest)
        return report, manifest
