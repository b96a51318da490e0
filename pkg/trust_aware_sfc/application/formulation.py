"""
Solver-independent MILP models of the embedding problem.

`build_pb_model` builds the path-based model over a path universe (exact when
the universe holds every path, the KPB approximation when it holds the k
shortest). `build_link_based_model` builds the node-link multicommodity-flow
baseline whose flows are per substrate arc.
"""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from trust_aware_sfc._compat import StrEnum
from typing import Mapping

import numpy as np

from trust_aware_sfc.application.pathspace import PathUniverse, eligible_hosts
from trust_aware_sfc.application.validation import compute_accounting
from trust_aware_sfc.domain.models import (
    FLOW_EPSILON,
    AugmentedPath,
    Commodity,
    ConstraintFamily,
    EmbeddingSolution,
    ServiceRequest,
    StructuralError,
    SubstrateNetwork,
    Variant,
)

logger = logging.getLogger(__name__)


class ModelKind(StrEnum):
    PATH_BASED = "path_based"
    LINK_BASED = "link_based"


class VariableKind(StrEnum):
    BINARY = "binary"
    CONTINUOUS = "continuous"


class RowSense(StrEnum):
    LE = "<="
    GE = ">="
    EQ = "="


@dataclass(frozen=True, slots=True)
class Variable:
    index: int
    name: str
    kind: VariableKind
    lb: float = 0.0
    ub: float = math.inf
    fixed_by: ConstraintFamily | None = None

    @property
    def is_fixed(self) -> bool:
        return self.lb == self.ub


@dataclass(frozen=True, slots=True)
class LinearRow:
    family: ConstraintFamily
    name: str
    coefficients: tuple[tuple[int, float], ...]
    sense: RowSense
    rhs: float
    reconstructed: bool = False


@dataclass(frozen=True, slots=True)
class InfeasibilityNote:
    family: ConstraintFamily
    detail: str


@dataclass(frozen=True, slots=True)
class ModelArrays:
    c: np.ndarray
    a_ub: np.ndarray
    b_ub: np.ndarray
    a_eq: np.ndarray
    b_eq: np.ndarray
    lb: np.ndarray
    ub: np.ndarray


@dataclass(frozen=True)
class EmbeddingModel:
    """
    A minimization MILP: binaries x[i,u] place VNF i on server u, continuous
    variables carry flow either per candidate path or per substrate arc.
    """
    kind: ModelKind
    variant: Variant
    gamma: float
    network: SubstrateNetwork
    request: ServiceRequest
    variables: tuple[Variable, ...]
    objective: tuple[float, ...]
    rows: tuple[LinearRow, ...]
    binaries: Mapping[tuple[str, str], int]
    flows: Mapping[str, int] = field(default_factory=dict)
    arcs: Mapping[tuple[Commodity, str, str], int] = field(default_factory=dict)
    paths: Mapping[str, AugmentedPath] = field(default_factory=dict)
    infeasibility: InfeasibilityNote | None = None

    @property
    def binary_indices(self) -> list[int]:
        return sorted(self.binaries.values())

    @property
    def is_trivially_infeasible(self) -> bool:
        return self.infeasibility is not None

    def rows_of(self, family: ConstraintFamily) -> list[LinearRow]:
        return [row for row in self.rows if row.family is family]

    def to_arrays(self) -> ModelArrays:
        n = len(self.variables)
        ub_rows = [row for row in self.rows if row.sense is not RowSense.EQ]
        eq_rows = [row for row in self.rows if row.sense is RowSense.EQ]

        def dense(rows: list[LinearRow], flip_ge: bool) -> tuple[np.ndarray, np.ndarray]:
            matrix = np.zeros((len(rows), n))
            rhs = np.zeros(len(rows))
            for r, row in enumerate(rows):
                sign = -1.0 if flip_ge and row.sense is RowSense.GE else 1.0
                for index, coefficient in row.coefficients:
                    matrix[r, index] += sign * coefficient
                rhs[r] = sign * row.rhs
            return matrix, rhs

        a_ub, b_ub = dense(ub_rows, flip_ge=True)
        a_eq, b_eq = dense(eq_rows, flip_ge=False)
        lb = np.array([v.lb for v in self.variables], dtype=float)
        # The placement rows bound every free binary by 1.
        ub = np.array(
            [v.ub if v.is_fixed or v.kind is VariableKind.CONTINUOUS else math.inf for v in self.variables],
            dtype=float,
        )
        return ModelArrays(np.array(self.objective, dtype=float), a_ub, b_ub, a_eq, b_eq, lb, ub)

    def dump_lp(self) -> str:
        """LP-style text: objective, one row per constraint with its family tag, bounds."""
        names = [v.name for v in self.variables]

        def expression(terms: tuple[tuple[int, float], ...] | list[tuple[int, float]]) -> str:
            parts = []
            for index, coefficient in terms:
                if coefficient == 0:
                    continue
                sign = "-" if coefficient < 0 else "+"
                parts.append(f"{sign} {abs(coefficient):g} {names[index]}")
            text = " ".join(parts) or "0"
            return text[2:] if text.startswith("+ ") else text

        lines = [f"\\ {self.kind.value} model, variant {self.variant.value}, gamma {self.gamma:g}"]
        if self.infeasibility:
            lines.append(f"\\ trivially infeasible ({self.infeasibility.family.value}): {self.infeasibility.detail}")
        lines.append("Minimize")
        lines.append(" obj: " + expression([(i, c) for i, c in enumerate(self.objective)]))
        lines.append("Subject To")
        for row in self.rows:
            tag = f"[{row.family.value}{', reconstructed-baseline' if row.reconstructed else ''}]"
            lines.append(f" {row.name}: {expression(row.coefficients)} {row.sense.value} {row.rhs:g} \\ {tag}")
        lines.append("Bounds")
        for v in self.variables:
            if v.is_fixed:
                note = f" \\ fixed by {v.fixed_by.value}" if v.fixed_by else ""
                lines.append(f" {v.name} = {v.lb:g}{note}")
            elif v.kind is VariableKind.BINARY:
                lines.append(f" 0 <= {v.name} <= 1")
            else:
                lines.append(f" {v.name} >= {v.lb:g}")
        binaries = [v.name for v in self.variables if v.kind is VariableKind.BINARY]
        if binaries:
            lines.append("Binaries")
            lines.append(" " + " ".join(binaries))
        lines.append("End")
        return "\n".join(lines) + "\n"

    def extract_solution(self, x: np.ndarray) -> EmbeddingSolution:
        """
        Turn a primal vector with integral binaries into an EmbeddingSolution.

        Link-based arc flows are decomposed into paths so every solution is
        expressed over augmented paths.

        Raises:
            StructuralError: If some VNF has no binary set to 1
        """
        assignment: dict[str, str] = {}
        for (vnf_id, node_id), index in sorted(self.binaries.items()):
            if x[index] > 0.5:
                assignment[vnf_id] = node_id
        missing = [vnf.id for vnf in self.request.vnfs if vnf.id not in assignment]
        if missing:
            raise StructuralError(f"No placement for VNFs {missing}")

        if self.kind is ModelKind.PATH_BASED:
            flows = {
                path_id: float(x[index])
                for path_id, index in sorted(self.flows.items())
                if x[index] > FLOW_EPSILON
            }
            paths = {path_id: self.paths[path_id] for path_id in flows}
        else:
            flows, paths = self._decompose_arc_flows(x, assignment)

        solution = EmbeddingSolution(assignment=assignment, flows=flows, paths=paths)
        return compute_accounting(self.network, self.request, solution, self.gamma)

    def _decompose_arc_flows(
        self, x: np.ndarray, assignment: Mapping[str, str]
    ) -> tuple[dict[str, float], dict[str, AugmentedPath]]:
        flows: dict[str, float] = {}
        paths: dict[str, AugmentedPath] = {}
        per_commodity: dict[Commodity, dict[tuple[str, str], float]] = defaultdict(dict)
        for (commodity, u, v), index in self.arcs.items():
            if x[index] > FLOW_EPSILON:
                per_commodity[commodity][(u, v)] = float(x[index])

        for vlink in self.request.vlinks:
            commodity = vlink.commodity
            source, target = assignment[vlink.src], assignment[vlink.dst]
            prefix = f"{commodity[0]}->{commodity[1]}~"
            if source == target:
                path_id = f"{prefix}0"
                flows[path_id] = vlink.bw_demand
                paths[path_id] = AugmentedPath(path_id, commodity, (source,), 0.0)
                continue
            residual = per_commodity.get(commodity, {})
            remaining = vlink.bw_demand
            count = 0
            while remaining > FLOW_EPSILON:
                walk = _augmenting_walk(residual, source, target)
                if walk is None:
                    break
                amount = min(remaining, *(residual[arc] for arc in zip(walk, walk[1:])))
                for arc in zip(walk, walk[1:]):
                    residual[arc] -= amount
                    if residual[arc] <= FLOW_EPSILON:
                        del residual[arc]
                path_id = f"{prefix}{count}"
                flows[path_id] = amount
                paths[path_id] = AugmentedPath(path_id, commodity, walk, float(len(walk) - 1))
                remaining -= amount
                count += 1
        return flows, paths


def _augmenting_walk(
    residual: Mapping[tuple[str, str], float], source: str, target: str
) -> tuple[str, ...] | None:
    """Depth-first simple walk over positive-flow arcs, neighbours in id order."""
    outgoing: dict[str, list[str]] = defaultdict(list)
    for u, v in sorted(residual):
        outgoing[u].append(v)
    stack: list[tuple[str, int]] = [(source, 0)]
    on_path = {source}
    while stack:
        node, position = stack[-1]
        if node == target:
            return tuple(n for n, _ in stack)
        successors = outgoing.get(node, [])
        if position >= len(successors):
            stack.pop()
            continue
        stack[-1] = (node, position + 1)
        successor = successors[position]
        if successor not in on_path:
            on_path.add(successor)
            stack.append((successor, 0))
    return None


def compute_big_M(req: ServiceRequest, vnf_id: str) -> float:
    """Total demand of the virtual links incident to `vnf_id`: the tightest valid coupling constant."""
    return math.fsum(
        vlink.bw_demand for vlink in req.vlinks if vnf_id in (vlink.src, vlink.dst)
    )


class _ModelBuilder:
    def __init__(self) -> None:
        self.variables: list[Variable] = []
        self.objective: list[float] = []
        self.rows: list[LinearRow] = []

    def add_variable(
        self,
        name: str,
        kind: VariableKind,
        cost: float,
        ub: float = math.inf,
        fixed_by: ConstraintFamily | None = None,
    ) -> int:
        index = len(self.variables)
        if fixed_by is not None:
            ub = 0.0
        self.variables.append(Variable(index, name, kind, 0.0, ub, fixed_by))
        self.objective.append(cost)
        return index

    def add_row(
        self,
        family: ConstraintFamily,
        name: str,
        terms: list[tuple[int, float]],
        sense: RowSense,
        rhs: float,
        reconstructed: bool = False,
    ) -> None:
        self.rows.append(LinearRow(family, name, tuple(terms), sense, rhs, reconstructed))


def _placement_binaries(
    builder: _ModelBuilder,
    net: SubstrateNetwork,
    req: ServiceRequest,
    variant: Variant,
    gamma: float,
    reconstructed: bool = False,
) -> tuple[dict[tuple[str, str], int], dict[str, tuple[str, ...]], InfeasibilityNote | None]:
    binaries: dict[tuple[str, str], int] = {}
    hosts_of: dict[str, tuple[str, ...]] = {}
    note: InfeasibilityNote | None = None

    for vnf in req.vnfs:
        hosts = eligible_hosts(net, vnf, variant.node_trust)
        hosts_of[vnf.id] = hosts
        for node_id in hosts:
            binaries[(vnf.id, node_id)] = builder.add_variable(
                f"x[{vnf.id},{node_id}]", VariableKind.BINARY, gamma * net.node(node_id).trust.value, ub=1.0
            )
        if not hosts and note is None:
            family = ConstraintFamily.CPU_CAP
            if variant.node_trust and eligible_hosts(net, vnf, trust_aware=False):
                family = ConstraintFamily.NODE_TRUST
            note = InfeasibilityNote(family, f"VNF {vnf.id} has no eligible host")

    for vnf in req.vnfs:
        builder.add_row(
            ConstraintFamily.PLACEMENT,
            f"place[{vnf.id}]",
            [(binaries[(vnf.id, u)], 1.0) for u in hosts_of[vnf.id]],
            RowSense.EQ,
            1.0,
            reconstructed,
        )

    for server in net.servers:
        terms = [
            (binaries[(vnf.id, server.id)], vnf.cpu_demand)
            for vnf in req.vnfs
            if (vnf.id, server.id) in binaries
        ]
        if terms:
            builder.add_row(
                ConstraintFamily.CPU_CAP, f"cpu[{server.id}]", terms, RowSense.LE,
                net.residual_cpu(server.id), reconstructed,
            )

    if note is None:
        usable = {node_id for hosts in hosts_of.values() for node_id in hosts}
        capacity = math.fsum(net.residual_cpu(node_id) for node_id in usable)
        if req.total_cpu > capacity:
            note = InfeasibilityNote(
                ConstraintFamily.CPU_CAP,
                f"request needs {req.total_cpu:g} CPU, eligible servers offer {capacity:g}",
            )
    return binaries, hosts_of, note


def build_pb_model(
    net: SubstrateNetwork,
    req: ServiceRequest,
    universe: PathUniverse,
    variant: Variant = Variant.PB_SCE,
    gamma: float = 1.0,
    big_m_scale: float = 1.0,
    couple_destination: bool = True,
) -> EmbeddingModel:
    """
    Build the path-based model over `universe`.

    Node trust is enforced by creating binaries only for eligible hosts;
    path trust by fixing the flow of every path below its virtual link's
    requirement to zero.

    Args:
        net: Substrate network (effective residuals are the capacities)
        req: Request to embed
        universe: Candidate paths per commodity, built for the same inputs
        variant: Which trust constraints apply
        gamma: Weight of the processing cost term
        big_m_scale: Multiplier on the tight coupling constant
        couple_destination: Also tie flows to the host of the virtual link's destination

    Returns:
        EmbeddingModel, possibly flagged trivially infeasible

    Raises:
        ValueError: If gamma is negative, big_m_scale is below 1 or the universe misses a commodity
    """
    if gamma < 0:
        raise ValueError(f"gamma must be non-negative, got {gamma}")
    if big_m_scale < 1.0:
        raise ValueError(f"big_m_scale must be at least 1, got {big_m_scale}")
    missing = [c for c in req.commodities if c not in universe]
    if missing:
        raise ValueError(f"Path universe has no entry for commodities {missing}")

    builder = _ModelBuilder()
    binaries, hosts_of, note = _placement_binaries(builder, net, req, variant, gamma)

    flows: dict[str, int] = {}
    paths: dict[str, AugmentedPath] = {}
    for vlink in req.vlinks:
        src_hosts, dst_hosts = set(hosts_of[vlink.src]), set(hosts_of[vlink.dst])
        free = 0
        for path in universe[vlink.commodity]:
            if path.id in paths:
                raise ValueError(f"Duplicate path id {path.id}")
            fixed_by = None
            if path.host_src not in src_hosts or path.host_dst not in dst_hosts:
                fixed_by = ConstraintFamily.NODE_TRUST if variant.node_trust else ConstraintFamily.PLACEMENT
            elif variant.path_trust and path.trust.value < vlink.trust_req.value:
                fixed_by = ConstraintFamily.PATH_TRUST
            flows[path.id] = builder.add_variable(f"f[{path.id}]", VariableKind.CONTINUOUS, path.cost, fixed_by=fixed_by)
            paths[path.id] = path
            free += fixed_by is None

        if note is None and vlink.bw_demand > 0 and free == 0:
            if not universe[vlink.commodity]:
                note = InfeasibilityNote(ConstraintFamily.DEMAND, f"commodity {vlink.src}->{vlink.dst} has no candidate path")
            elif variant.path_trust and any(
                path.trust.value < vlink.trust_req.value for path in universe[vlink.commodity]
            ):
                note = InfeasibilityNote(
                    ConstraintFamily.PATH_TRUST,
                    f"every path of {vlink.src}->{vlink.dst} is below trust {vlink.trust_req.value:g}",
                )
            else:
                note = InfeasibilityNote(ConstraintFamily.DEMAND, f"commodity {vlink.src}->{vlink.dst} has no usable path")

        builder.add_row(
            ConstraintFamily.DEMAND,
            f"demand[{vlink.src},{vlink.dst}]",
            [(flows[p.id], 1.0) for p in universe[vlink.commodity]],
            RowSense.EQ,
            vlink.bw_demand,
        )

    coupling = [(ConstraintFamily.COUPLING_SRC, 0, lambda p: p.host_src)]
    if couple_destination:
        coupling.append((ConstraintFamily.COUPLING_DST, 1, lambda p: p.host_dst))
    for family, end, host_of in coupling:
        for vnf in req.vnfs:
            incident = [vl for vl in req.vlinks if vl.commodity[end] == vnf.id]
            if not incident:
                continue
            big_m = compute_big_M(req, vnf.id) * big_m_scale
            for node_id in hosts_of[vnf.id]:
                terms = [
                    (flows[p.id], 1.0)
                    for vl in incident
                    for p in universe[vl.commodity]
                    if host_of(p) == node_id and not builder.variables[flows[p.id]].is_fixed
                ]
                if not terms:
                    continue
                terms.append((binaries[(vnf.id, node_id)], -big_m))
                builder.add_row(family, f"{family.value}[{vnf.id},{node_id}]", terms, RowSense.LE, 0.0)

    link_terms: dict[tuple[str, str], list[tuple[int, float]]] = defaultdict(list)
    for path_id, index in flows.items():
        if builder.variables[index].is_fixed:
            continue
        for key in paths[path_id].edge_keys:
            link_terms[key].append((index, 1.0))
    for key in sorted(link_terms):
        builder.add_row(
            ConstraintFamily.BW_CAP, f"bw[{key[0]},{key[1]}]", link_terms[key], RowSense.LE, net.residual_bw(key)
        )

    if note is not None:
        logger.debug("Model for %s is trivially infeasible: %s", req.id, note.detail)
    return EmbeddingModel(
        kind=ModelKind.PATH_BASED,
        variant=variant,
        gamma=gamma,
        network=net,
        request=req,
        variables=tuple(builder.variables),
        objective=tuple(builder.objective),
        rows=tuple(builder.rows),
        binaries=binaries,
        flows=flows,
        paths=paths,
        infeasibility=note,
    )


def build_link_based_model(
    net: SubstrateNetwork,
    req: ServiceRequest,
    variant: Variant = Variant.PB_SCE,
    gamma: float = 1.0,
) -> EmbeddingModel:
    """
    Node-link multicommodity-flow baseline: one flow variable per commodity
    and directed substrate arc, flow conservation at every substrate node.

    Raises:
        ValueError: For the path-trust variant, which has no arc formulation
    """
    if variant.path_trust:
        raise ValueError("The link-based model supports PB_SCE and PB_NODE_TRUST only")
    if gamma < 0:
        raise ValueError(f"gamma must be non-negative, got {gamma}")

    builder = _ModelBuilder()
    binaries, _, note = _placement_binaries(builder, net, req, variant, gamma, reconstructed=True)

    arcs: dict[tuple[Commodity, str, str], int] = {}
    for vlink in req.vlinks:
        commodity = vlink.commodity
        for u, v in sorted(net.links):
            for a, b in ((u, v), (v, u)):
                arcs[(commodity, a, b)] = builder.add_variable(
                    f"f[{commodity[0]}->{commodity[1]},{a},{b}]", VariableKind.CONTINUOUS, 1.0
                )

    for vlink in req.vlinks:
        commodity = vlink.commodity
        for node_id in sorted(net.nodes):
            terms = [(arcs[(commodity, node_id, w)], 1.0) for w in net.neighbors(node_id)]
            terms += [(arcs[(commodity, w, node_id)], -1.0) for w in net.neighbors(node_id)]
            if (vlink.src, node_id) in binaries:
                terms.append((binaries[(vlink.src, node_id)], -vlink.bw_demand))
            if (vlink.dst, node_id) in binaries:
                terms.append((binaries[(vlink.dst, node_id)], vlink.bw_demand))
            builder.add_row(
                ConstraintFamily.FLOW_CONSERVATION,
                f"flow[{commodity[0]}->{commodity[1]},{node_id}]",
                terms,
                RowSense.EQ,
                0.0,
                reconstructed=True,
            )

    for key in sorted(net.links):
        u, v = key
        terms = [
            (arcs[(vlink.commodity, a, b)], 1.0)
            for vlink in req.vlinks
            for a, b in ((u, v), (v, u))
        ]
        if terms:
            builder.add_row(
                ConstraintFamily.BW_CAP, f"bw[{u},{v}]", terms, RowSense.LE, net.residual_bw(key), reconstructed=True
            )

    return EmbeddingModel(
        kind=ModelKind.LINK_BASED,
        variant=variant,
        gamma=gamma,
        network=net,
        request=req,
        variables=tuple(builder.variables),
        objective=tuple(builder.objective),
        rows=tuple(builder.rows),
        binaries=binaries,
        arcs=arcs,
        infeasibility=note,
    )
