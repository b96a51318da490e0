"""
Discrete-event admission simulator and the experiments built on it.

Requests arrive, are embedded by one method (KPB with some k, or the
link-based baseline) under one variant, hold their resources for their
holding time and depart. Metrics are accumulated per reporting window and
summarized over the steady state, the second half of the arrival horizon.
"""

from __future__ import annotations

import heapq
import logging
import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import IntEnum
from typing import Callable

import numpy as np

from trust_aware_sfc._compat import StrEnum
from trust_aware_sfc.application.formulation import build_link_based_model, build_pb_model
from trust_aware_sfc.application.pathspace import PathTrustTable, build_path_universe
from trust_aware_sfc.application.repositories import IModelSolver
from trust_aware_sfc.application.validation import apply_embedding, release_embedding, validate_solution
from trust_aware_sfc.domain.models import (
    FEASIBILITY_TOLERANCE,
    ConstraintFamily,
    EmbeddingSolution,
    PathTrustPolicy,
    ServiceRequest,
    SolveBudget,
    SolveResult,
    SolveStatus,
    SubstrateNetwork,
    Variant,
)
from trust_aware_sfc.application.workload import (
    ExperimentConfig,
    WorkloadStreams,
    generate_fat_tree_zone,
    generate_request_stream,
)

logger = logging.getLogger(__name__)

CONSERVATION_TOLERANCE = 2 * FEASIBILITY_TOLERANCE
SolverFactory = Callable[[SolveBudget], IModelSolver]


class ConservationError(RuntimeError):
    """Substrate residuals disagree with the resources held by admitted requests."""


class MethodKind(StrEnum):
    KPB = "kpb"
    LINK_BASED = "link_based"


@dataclass(frozen=True, slots=True)
class Method:
    kind: MethodKind
    variant: Variant = Variant.PB_SCE
    k: int | None = 12

    @property
    def label(self) -> str:
        if self.kind is MethodKind.LINK_BASED:
            return f"link-based-{self.variant.short_name}"
        k = "inf" if self.k is None else str(self.k)
        return f"{k}-pb-{self.variant.short_name}"

    @classmethod
    def kpb(cls, k: int | None, variant: Variant = Variant.PB_SCE) -> "Method":
        return cls(MethodKind.KPB, variant, k)

    @classmethod
    def link_based(cls, variant: Variant = Variant.PB_SCE) -> "Method":
        return cls(MethodKind.LINK_BASED, variant, None)


class EventKind(IntEnum):
    # Departures sort before arrivals at equal times.
    DEPARTURE = 0
    ARRIVAL = 1


@dataclass(frozen=True, slots=True, order=True)
class SimEvent:
    time: float
    kind: EventKind
    request_id: str


class Decision(StrEnum):
    ACCEPTED = "accepted"
    INFEASIBLE = "infeasible"
    TIMEOUT = "timeout"
    ERROR = "error"


@dataclass(frozen=True, slots=True)
class RequestRecord:
    request_id: str
    arrival_time: float
    vnf_count: int
    decision: Decision
    objective: float | None = None
    bw_revenue: float = 0.0
    bw_cost: float = 0.0
    cpu_revenue: float = 0.0
    cpu_cost: float = 0.0
    nodes_explored: int = 0
    lp_iterations: int = 0
    binding_family: ConstraintFamily | None = None

    @property
    def accepted(self) -> bool:
        return self.decision is Decision.ACCEPTED


@dataclass(frozen=True, slots=True)
class EventLogEntry:
    time: float
    kind: EventKind
    request_id: str
    decision: Decision | None
    cpu_utilization: float


@dataclass(frozen=True, slots=True)
class WindowMetrics:
    index: int
    start: float
    end: float
    arrivals: int
    accepted: int
    acceptance_ratio: float
    cpu_utilization: float
    bw_revenue: float
    bw_cost: float
    cpu_revenue: float
    cpu_cost: float


WINDOW_METRICS = ("acceptance_ratio", "cpu_utilization", "bw_revenue", "bw_cost", "cpu_revenue", "cpu_cost")


@dataclass(frozen=True, slots=True)
class SteadyState:
    start: float
    end: float
    arrivals: int
    accepted: int
    acceptance_ratio: float
    cpu_utilization: float
    bw_revenue: float
    bw_cost: float
    cpu_revenue: float
    cpu_cost: float
    rejected_infeasible: int
    rejected_timeout: int
    rejected_error: int

    @property
    def bw_revenue_per_request(self) -> float:
        return self.bw_revenue / self.accepted if self.accepted else 0.0


@dataclass(frozen=True)
class MetricsSeries:
    label: str
    windows: tuple[WindowMetrics, ...]
    records: tuple[RequestRecord, ...]
    accepted_size_histogram: dict[int, int]
    initial_utilization: float
    horizon: float
    steady_state: SteadyState

    @property
    def arrivals(self) -> int:
        return len(self.records)

    @property
    def accepted(self) -> int:
        return sum(record.accepted for record in self.records)

    @property
    def acceptance_ratio(self) -> float:
        return self.accepted / self.arrivals if self.records else 0.0

    def rejections(self, decision: Decision) -> int:
        return sum(record.decision is decision for record in self.records)


@dataclass(frozen=True)
class SimulationRun:
    method: Method
    metrics: MetricsSeries
    events: tuple[EventLogEntry, ...]


class _UtilizationIntegral:
    """Time integral of a piecewise-constant utilization, split into windows."""

    def __init__(self, window: float, horizon: float, initial: float):
        self.window = window
        self.horizon = horizon
        self.count = max(1, math.ceil(horizon / window)) if horizon > 0 else 0
        self.area = [0.0] * self.count
        self.steady_area = 0.0
        self.clock = 0.0
        self.level = initial

    def advance(self, until: float) -> None:
        until = min(until, self.horizon)
        half = self.horizon / 2.0
        while self.clock < until:
            index = min(int(self.clock // self.window), self.count - 1)
            boundary = min(until, (index + 1) * self.window)
            if boundary <= self.clock:
                boundary = until
            self.area[index] += self.level * (boundary - self.clock)
            overlap = boundary - max(self.clock, half)
            if overlap > 0:
                self.steady_area += self.level * overlap
            self.clock = boundary

    def set_level(self, level: float) -> None:
        self.level = level

    def window_average(self, index: int) -> float:
        start = index * self.window
        end = min(self.horizon, start + self.window)
        return self.area[index] / (end - start) if end > start else self.level


def embed_with_method(
    net: SubstrateNetwork,
    req: ServiceRequest,
    method: Method,
    cfg: ExperimentConfig,
    solver: IModelSolver,
    table: PathTrustTable | None,
) -> SolveResult:
    """Build the method's model for `req` on the current residuals and solve it."""
    if method.kind is MethodKind.LINK_BASED:
        model = build_link_based_model(net, req, method.variant, cfg.gamma)
    else:
        policy: PathTrustPolicy | None = cfg.trust_policy if method.variant.path_trust else None
        universe = build_path_universe(net, req, method.k, method.variant.node_trust, policy, table)
        model = build_pb_model(
            net, req, universe, method.variant, cfg.gamma, cfg.big_m_scale, cfg.couple_destination
        )
    return solver.solve_milp(model)


def _check_conservation(
    baseline: SubstrateNetwork,
    net: SubstrateNetwork,
    admitted: dict[str, tuple[ServiceRequest, EmbeddingSolution]],
) -> None:
    cpu_held: Counter[str] = Counter()
    bw_held: Counter[tuple[str, str]] = Counter()
    for req, sol in admitted.values():
        for vnf in req.vnfs:
            cpu_held[sol.assignment[vnf.id]] += vnf.cpu_demand
        for path_id, flow in sol.flows.items():
            for key in sol.paths[path_id].edge_keys:
                bw_held[key] += flow
    for node_id in net.nodes:
        in_use = baseline.residual_cpu(node_id) - net.residual_cpu(node_id)
        if abs(in_use - cpu_held[node_id]) > CONSERVATION_TOLERANCE * max(1.0, cpu_held[node_id]):
            raise ConservationError(f"Node {node_id}: {in_use} CPU in use, admitted requests hold {cpu_held[node_id]}")
    for key in net.links:
        in_use = baseline.residual_bw(key) - net.residual_bw(key)
        if abs(in_use - bw_held[key]) > CONSERVATION_TOLERANCE * max(1.0, bw_held[key]):
            raise ConservationError(f"Link {key}: {in_use} Mbps in use, admitted requests hold {bw_held[key]}")


def run_simulation(
    cfg: ExperimentConfig,
    method: Method,
    solver: IModelSolver,
    requests: list[ServiceRequest] | None = None,
    substrate: SubstrateNetwork | None = None,
    table: PathTrustTable | None = None,
) -> SimulationRun:
    """
    Run one method over a request stream.

    Args:
        cfg: Experiment config; generates whatever inputs are not given
        method: Embedding method and variant
        solver: MILP solver used for every admission decision
        requests: Arrival stream (default: generated from cfg.seed)
        substrate: Initial substrate (default: generated fat-tree zone)
        table: Path-trust table (default: seeded from the trust stream)

    Returns:
        SimulationRun with window metrics, per-request records and the event log

    Raises:
        ConservationError: If residuals ever disagree with the admitted embeddings
    """
    streams = WorkloadStreams.from_seed(cfg.seed)
    baseline = substrate if substrate is not None else generate_fat_tree_zone(cfg, streams.topology)
    if requests is None:
        requests = generate_request_stream(cfg, streams)
    if table is None:
        table = PathTrustTable(
            seed=int(streams.trusts.integers(2**63 - 1)), bounds=cfg.distributions.path_trust
        )

    by_id = {req.id: req for req in requests}
    events = [SimEvent(req.arrival_time, EventKind.ARRIVAL, req.id) for req in requests]
    heapq.heapify(events)
    horizon = max((req.arrival_time for req in requests), default=0.0)
    initial_utilization = baseline.cpu_utilization()
    utilization = _UtilizationIntegral(cfg.window, horizon, initial_utilization)

    net = baseline
    admitted: dict[str, tuple[ServiceRequest, EmbeddingSolution]] = {}
    records: list[RequestRecord] = []
    log: list[EventLogEntry] = []
    logger.info("Simulating %s over %d requests", method.label, len(requests))

    while events:
        event = heapq.heappop(events)
        utilization.advance(event.time)
        req = by_id[event.request_id]
        decision: Decision | None = None
        if event.kind is EventKind.DEPARTURE:
            net = release_embedding(net, req.id)
            del admitted[req.id]
        else:
            result = embed_with_method(net, req, method, cfg, solver, table)
            record = _decide(net, req, method, result)
            decision = record.decision
            if record.accepted:
                net = apply_embedding(net, req, result.solution, method.variant.trust_mode)
                admitted[req.id] = (req, result.solution)
                heapq.heappush(events, SimEvent(event.time + req.holding_time, EventKind.DEPARTURE, req.id))
            records.append(record)
            logger.debug(
                "%s %s at t=%.3f: %s (nodes=%d, %.3fs)",
                method.label, req.id, event.time, decision.value,
                result.stats.nodes_explored, result.stats.wall_time,
            )
        _check_conservation(baseline, net, admitted)
        utilization.set_level(net.cpu_utilization())
        log.append(EventLogEntry(event.time, event.kind, req.id, decision, utilization.level))

    utilization.advance(horizon)
    if net.residual_snapshot() != baseline.residual_snapshot():
        raise ConservationError("Residuals differ from the initial state after all departures")

    metrics = _summarize(method.label, records, utilization, initial_utilization, horizon, cfg.window)
    logger.info(
        "%s: accepted %d/%d, steady-state acceptance %.3f, utilization %.3f",
        method.label, metrics.accepted, metrics.arrivals,
        metrics.steady_state.acceptance_ratio, metrics.steady_state.cpu_utilization,
    )
    return SimulationRun(method, metrics, tuple(log))


def _decide(net: SubstrateNetwork, req: ServiceRequest, method: Method, result: SolveResult) -> RequestRecord:
    common = dict(
        request_id=req.id,
        arrival_time=req.arrival_time,
        vnf_count=len(req.vnfs),
        nodes_explored=result.stats.nodes_explored,
        lp_iterations=result.stats.lp_iterations,
    )
    if result.status is SolveStatus.OPTIMAL and result.solution is not None:
        report = validate_solution(net, req, result.solution, method.variant.trust_mode)
        if report.is_valid:
            sol = result.solution
            return RequestRecord(
                decision=Decision.ACCEPTED,
                objective=result.objective,
                bw_revenue=sol.bw_revenue,
                bw_cost=sol.bw_cost,
                cpu_revenue=sol.cpu_revenue,
                cpu_cost=sol.cpu_cost,
                **common,
            )
        logger.error("Solver returned an invalid embedding for %s: %s", req.id, report.violations)
        return RequestRecord(decision=Decision.ERROR, **common)
    decision = {
        SolveStatus.INFEASIBLE: Decision.INFEASIBLE,
        SolveStatus.TIMEOUT: Decision.TIMEOUT,
    }.get(result.status, Decision.ERROR)
    return RequestRecord(decision=decision, binding_family=result.binding_family, **common)


def _summarize(
    label: str,
    records: list[RequestRecord],
    utilization: _UtilizationIntegral,
    initial_utilization: float,
    horizon: float,
    window: float,
) -> MetricsSeries:
    windows = []
    for index in range(utilization.count):
        start = index * window
        end = min(horizon, start + window)
        last = index == utilization.count - 1
        members = [r for r in records if start <= r.arrival_time < end or (last and r.arrival_time == end)]
        accepted = [r for r in members if r.accepted]
        windows.append(WindowMetrics(
            index=index,
            start=start,
            end=end,
            arrivals=len(members),
            accepted=len(accepted),
            acceptance_ratio=len(accepted) / len(members) if members else 0.0,
            cpu_utilization=utilization.window_average(index),
            bw_revenue=math.fsum(r.bw_revenue for r in accepted),
            bw_cost=math.fsum(r.bw_cost for r in accepted),
            cpu_revenue=math.fsum(r.cpu_revenue for r in accepted),
            cpu_cost=math.fsum(r.cpu_cost for r in accepted),
        ))

    half = horizon / 2.0
    steady = [r for r in records if r.arrival_time >= half]
    steady_accepted = [r for r in steady if r.accepted]
    steady_utilization = utilization.steady_area / (horizon - half) if horizon > 0 else initial_utilization
    steady_state = SteadyState(
        start=half,
        end=horizon,
        arrivals=len(steady),
        accepted=len(steady_accepted),
        acceptance_ratio=len(steady_accepted) / len(steady) if steady else 0.0,
        cpu_utilization=steady_utilization,
        bw_revenue=math.fsum(r.bw_revenue for r in steady_accepted),
        bw_cost=math.fsum(r.bw_cost for r in steady_accepted),
        cpu_revenue=math.fsum(r.cpu_revenue for r in steady_accepted),
        cpu_cost=math.fsum(r.cpu_cost for r in steady_accepted),
        rejected_infeasible=sum(r.decision is Decision.INFEASIBLE for r in steady),
        rejected_timeout=sum(r.decision is Decision.TIMEOUT for r in steady),
        rejected_error=sum(r.decision is Decision.ERROR for r in steady),
    )
    histogram = dict(sorted(Counter(r.vnf_count for r in records if r.accepted).items()))
    return MetricsSeries(
        label=label,
        windows=tuple(windows),
        records=tuple(records),
        accepted_size_histogram=histogram,
        initial_utilization=initial_utilization,
        horizon=horizon,
        steady_state=steady_state,
    )


# --- experiment reports ---

def size_cdf(histogram: dict[int, int], sizes: list[int]) -> list[float]:
    total = sum(histogram.values())
    if total == 0:
        return [0.0 for _ in sizes]
    running, cdf = 0, []
    for size in sizes:
        running += histogram.get(size, 0)
        cdf.append(running / total)
    return cdf


def sup_distance(a: list[float], b: list[float]) -> float:
    return max((abs(x - y) for x, y in zip(a, b)), default=0.0)


def box_stats(values: list[float]) -> tuple[float, float, float, float, float]:
    if not values:
        return (0.0, 0.0, 0.0, 0.0, 0.0)
    q = np.percentile(np.asarray(values, dtype=float), [0, 25, 50, 75, 100])
    return tuple(float(v) for v in q)  # type: ignore[return-value]


@dataclass(frozen=True)
class ExperimentReport:
    """Figure-backing data of one experiment: every method's series plus comparisons."""
    name: str
    runs: tuple[SimulationRun, ...]
    reference: str | None = None
    sizes: tuple[int, ...] = (5, 6, 7, 8, 9)
    notes: dict[str, str] = field(default_factory=dict)

    @property
    def labels(self) -> list[str]:
        return [run.metrics.label for run in self.runs]

    def series(self, label: str) -> MetricsSeries:
        for run in self.runs:
            if run.metrics.label == label:
                return run.metrics
        raise KeyError(label)

    def incremental_revenue_pct(self, label: str, metric: str) -> float | None:
        """Steady-state revenue of `label` relative to the reference method, in percent."""
        if self.reference is None:
            return None
        ours = getattr(self.series(label).steady_state, metric)
        reference = getattr(self.series(self.reference).steady_state, metric)
        return (ours - reference) / reference * 100.0 if reference else None

    def cdf(self, label: str) -> list[float]:
        return size_cdf(self.series(label).accepted_size_histogram, list(self.sizes))

    def cdf_distance(self, label: str) -> float | None:
        if self.reference is None:
            return None
        return sup_distance(self.cdf(label), self.cdf(self.reference))

    def summary_rows(self) -> list[dict[str, object]]:
        rows = []
        first = self.runs[0].metrics.steady_state if self.runs else None
        for run in self.runs:
            label = run.metrics.label
            steady = run.metrics.steady_state
            rows.append({
                "method": label,
                "arrivals": steady.arrivals,
                "accepted": steady.accepted,
                "acceptance_ratio": steady.acceptance_ratio,
                "cpu_utilization": steady.cpu_utilization,
                "bw_revenue": steady.bw_revenue,
                "bw_cost": steady.bw_cost,
                "cpu_revenue": steady.cpu_revenue,
                "cpu_cost": steady.cpu_cost,
                "bw_revenue_per_request": steady.bw_revenue_per_request,
                "rejected_infeasible": steady.rejected_infeasible,
                "rejected_timeout": steady.rejected_timeout,
                "rejected_error": steady.rejected_error,
                "incremental_cpu_revenue_pct": self.incremental_revenue_pct(label, "cpu_revenue"),
                "incremental_bw_revenue_pct": self.incremental_revenue_pct(label, "bw_revenue"),
                "cdf_sup_distance": self.cdf_distance(label),
                "acceptance_delta": steady.acceptance_ratio - first.acceptance_ratio if first else 0.0,
                "utilization_delta": steady.cpu_utilization - first.cpu_utilization if first else 0.0,
            })
        return rows


def experiment_a_methods() -> list[Method]:
    return [Method.kpb(8), Method.kpb(10), Method.kpb(12), Method.link_based()]


def experiment_b_methods(k: int | None = 12) -> list[Method]:
    return [Method.kpb(k, variant) for variant in Variant]


def run_methods(
    cfg: ExperimentConfig,
    methods: list[Method],
    solver_factory: SolverFactory,
) -> list[SimulationRun]:
    """
    Run every method on the same substrate, request stream and path-trust table.

    With `cfg.workers > 1` methods run in separate processes; every process
    regenerates the same inputs from the seed, so results match the
    sequential run.
    """
    if cfg.workers > 1 and len(methods) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.workers, len(methods))) as pool:
            single = cfg.model_copy(update={"workers": 1})
            return list(pool.map(_run_single, [single] * len(methods), methods, [solver_factory] * len(methods)))

    streams = WorkloadStreams.from_seed(cfg.seed)
    substrate = generate_fat_tree_zone(cfg, streams.topology)
    requests = generate_request_stream(cfg, streams)
    trust_seed = int(streams.trusts.integers(2**63 - 1))
    budget = SolveBudget(time_limit=cfg.solver_time_limit, node_limit=cfg.node_limit)
    runs = []
    for method in methods:
        table = PathTrustTable(seed=trust_seed, bounds=cfg.distributions.path_trust)
        runs.append(run_simulation(cfg, method, solver_factory(budget), requests, substrate, table))
    return runs


def _run_single(cfg: ExperimentConfig, method: Method, solver_factory: SolverFactory) -> SimulationRun:
    return run_methods(cfg, [method], solver_factory)[0]


def _sizes(cfg: ExperimentConfig) -> tuple[int, ...]:
    low, high = cfg.distributions.vnf_count
    return tuple(range(low, high + 1))


def run_experiment_A(cfg: ExperimentConfig, solver_factory: SolverFactory) -> ExperimentReport:
    """KPB with k = 8, 10, 12 against the link-based optimum, no trust constraints."""
    runs = run_methods(cfg, experiment_a_methods(), solver_factory)
    return ExperimentReport("A", tuple(runs), reference=Method.link_based().label, sizes=_sizes(cfg))


def run_experiment_B(cfg: ExperimentConfig, solver_factory: SolverFactory) -> ExperimentReport:
    """KPB with k = 12 under each variant; deltas are relative to PB_SCE."""
    runs = run_methods(cfg, experiment_b_methods(cfg.k or 12), solver_factory)
    return ExperimentReport("B", tuple(runs), sizes=_sizes(cfg))


def size_sensitivity(
    cfg: ExperimentConfig,
    fixed_vnf_count: int,
    solver_factory: SolverFactory,
    method: Method | None = None,
) -> ExperimentReport:
    """
    Mixed-size stream against a stream of only `fixed_vnf_count`-VNF requests.

    Raises:
        ValueError: If the count lies outside the configured VNF-count bounds
    """
    low, high = cfg.distributions.vnf_count
    if not (low <= fixed_vnf_count <= high):
        raise ValueError(f"fixed VNF count must lie in [{low}, {high}], got {fixed_vnf_count}")
    method = method or Method.kpb(cfg.k or 12, Variant.PB_TASCE)
    mixed = run_methods(cfg.model_copy(update={"fixed_vnf_count": None}), [method], solver_factory)[0]
    fixed_cfg = cfg.model_copy(update={"fixed_vnf_count": fixed_vnf_count})
    fixed = run_methods(fixed_cfg, [method], solver_factory)[0]
    fixed = replace(fixed, metrics=replace(fixed.metrics, label=f"{method.label}-{fixed_vnf_count}vnf"))
    return ExperimentReport(
        "size",
        (mixed, fixed),
        sizes=_sizes(cfg),
        notes={"fixed_vnf_count": str(fixed_vnf_count)},
    )
