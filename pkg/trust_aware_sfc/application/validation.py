"""
Independent re-check of an embedding against the raw networks, plus the
resource bookkeeping that admits and releases embeddings.
"""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import replace

from trust_aware_sfc.domain.models import (
    FEASIBILITY_TOLERANCE,
    FLOW_EPSILON,
    Allocation,
    ConstraintFamily,
    EmbeddingSolution,
    InvalidEmbeddingError,
    LinkKey,
    ServiceRequest,
    StructuralError,
    SubstrateNetwork,
    TrustMode,
    ValidationReport,
    Violation,
)

logger = logging.getLogger(__name__)

_FAMILIES_BY_MODE: dict[TrustMode, frozenset[ConstraintFamily]] = {
    TrustMode.NONE: frozenset({
        ConstraintFamily.DOMAIN,
        ConstraintFamily.PLACEMENT,
        ConstraintFamily.DEMAND,
        ConstraintFamily.COUPLING_SRC,
        ConstraintFamily.COUPLING_DST,
        ConstraintFamily.CPU_CAP,
        ConstraintFamily.BW_CAP,
    }),
}
_FAMILIES_BY_MODE[TrustMode.NODE_TRUST] = _FAMILIES_BY_MODE[TrustMode.NONE] | {ConstraintFamily.NODE_TRUST}
_FAMILIES_BY_MODE[TrustMode.NODE_AND_LINK_TRUST] = (
    _FAMILIES_BY_MODE[TrustMode.NODE_TRUST] | {ConstraintFamily.PATH_TRUST}
)


def _check_structure(net: SubstrateNetwork, req: ServiceRequest, sol: EmbeddingSolution) -> None:
    vnf_ids = {vnf.id for vnf in req.vnfs}
    if set(sol.assignment) != vnf_ids:
        missing = sorted(vnf_ids - set(sol.assignment))
        extra = sorted(set(sol.assignment) - vnf_ids)
        raise StructuralError(f"Assignment does not cover request {req.id}: missing={missing} unknown={extra}")
    for vnf_id, host in sol.assignment.items():
        if host not in net.nodes:
            raise StructuralError(f"VNF {vnf_id} assigned to unknown substrate node {host}")

    commodities = set(req.commodities)
    for path_id in sol.flows:
        path = sol.paths.get(path_id)
        if path is None:
            raise StructuralError(f"Flow refers to unknown path {path_id}")
        if path.commodity not in commodities:
            raise StructuralError(f"Path {path_id} belongs to commodity {path.commodity} not in request {req.id}")
        if not path.nodes:
            raise StructuralError(f"Path {path_id} has no hosts")
        for node_id in path.nodes:
            if node_id not in net.nodes:
                raise StructuralError(f"Path {path_id} visits unknown substrate node {node_id}")
        if len(set(path.nodes)) != len(path.nodes):
            raise StructuralError(f"Path {path_id} is not simple")
        for u, v in path.substrate_edges:
            if not net.has_link(u, v):
                raise StructuralError(f"Path {path_id} uses missing substrate link {u}-{v}")


def validate_solution(
    net: SubstrateNetwork,
    req: ServiceRequest,
    sol: EmbeddingSolution,
    mode: TrustMode = TrustMode.NONE,
) -> ValidationReport:
    """
    Check every placement, demand, coupling, trust and capacity constraint of
    an embedding against the current residuals of `net`.

    Args:
        net: Substrate network whose effective residuals are the capacities
        req: The request the solution embeds
        sol: Candidate embedding
        mode: Which trust families are checked

    Returns:
        ValidationReport with one Violation per violated constraint

    Raises:
        StructuralError: If the solution refers to nodes, links, VNFs or paths that do not exist
    """
    _check_structure(net, req, sol)
    families = _FAMILIES_BY_MODE[mode]
    eps = FEASIBILITY_TOLERANCE
    violations: list[Violation] = []

    def report(family: ConstraintFamily, constraint_id: str, slack: float, detail: str = "") -> None:
        if family in families:
            violations.append(Violation(family, constraint_id, slack, detail))

    for path_id, flow in sorted(sol.flows.items()):
        if flow < -eps or math.isnan(flow):
            report(ConstraintFamily.DOMAIN, f"f[{path_id}]", flow, "negative flow")

    for vnf in req.vnfs:
        host = net.node(sol.assignment[vnf.id])
        if not host.is_server:
            report(ConstraintFamily.PLACEMENT, f"x[{vnf.id}]", -1.0, f"host {host.id} is a switch")
        slack = host.trust.value - vnf.trust_req.value
        if slack < -eps:
            report(ConstraintFamily.NODE_TRUST, f"t[{vnf.id},{host.id}]", slack,
                   f"host trust {host.trust.value} below requirement {vnf.trust_req.value}")

    flows_by_commodity: dict[tuple[str, str], list[float]] = defaultdict(list)
    for path_id, flow in sol.flows.items():
        path = sol.paths[path_id]
        flows_by_commodity[path.commodity].append(flow)
        if flow <= eps:
            continue
        src, dst = path.commodity
        if path.host_src != sol.assignment[src]:
            report(ConstraintFamily.COUPLING_SRC, f"c[{path_id}]", -flow,
                   f"path starts at {path.host_src}, {src} is hosted on {sol.assignment[src]}")
        if path.host_dst != sol.assignment[dst]:
            report(ConstraintFamily.COUPLING_DST, f"c[{path_id}]", -flow,
                   f"path ends at {path.host_dst}, {dst} is hosted on {sol.assignment[dst]}")
        requirement = req.vlink(path.commodity).trust_req.value
        slack = path.trust.value - requirement
        if slack < -eps:
            report(ConstraintFamily.PATH_TRUST, f"t[{path_id}]", slack,
                   f"path trust {path.trust.value} below requirement {requirement}")

    for vlink in req.vlinks:
        carried = math.fsum(flows_by_commodity.get(vlink.commodity, ()))
        slack = carried - vlink.bw_demand
        if abs(slack) > eps:
            report(ConstraintFamily.DEMAND, f"d[{vlink.src},{vlink.dst}]", slack,
                   f"carried {carried} of demand {vlink.bw_demand}")

    cpu_used = _cpu_usage(req, sol)
    for node_id, used in sorted(cpu_used.items()):
        slack = net.residual_cpu(node_id) - used
        if slack < -eps:
            report(ConstraintFamily.CPU_CAP, f"r[{node_id}]", slack)

    bw_used = _bw_usage(sol)
    for key, used in sorted(bw_used.items()):
        slack = net.residual_bw(key) - used
        if slack < -eps:
            report(ConstraintFamily.BW_CAP, f"c[{key[0]},{key[1]}]", slack)

    return ValidationReport(tuple(violations))


def _cpu_usage(req: ServiceRequest, sol: EmbeddingSolution) -> dict[str, float]:
    per_node: dict[str, list[float]] = defaultdict(list)
    for vnf in req.vnfs:
        per_node[sol.assignment[vnf.id]].append(vnf.cpu_demand)
    return {node_id: math.fsum(amounts) for node_id, amounts in per_node.items()}


def _bw_usage(sol: EmbeddingSolution) -> dict[LinkKey, float]:
    per_link: dict[LinkKey, list[float]] = defaultdict(list)
    for path_id, flow in sol.flows.items():
        if flow <= FLOW_EPSILON:
            continue
        for key in sol.paths[path_id].edge_keys:
            per_link[key].append(flow)
    return {key: math.fsum(amounts) for key, amounts in per_link.items()}


def compute_accounting(
    net: SubstrateNetwork,
    req: ServiceRequest,
    sol: EmbeddingSolution,
    gamma: float = 1.0,
) -> EmbeddingSolution:
    """Return `sol` with objective, revenues and costs recomputed from the raw networks."""
    flow_terms = [
        flow * sol.paths[path_id].hops for path_id, flow in sol.flows.items() if flow > FLOW_EPSILON
    ]
    bw_cost = math.fsum(flow_terms)
    hosts = {vnf.id: net.node(sol.assignment[vnf.id]) for vnf in req.vnfs}
    cpu_cost = math.fsum(vnf.cpu_demand * hosts[vnf.id].trust.value for vnf in req.vnfs)
    path_cost = math.fsum(
        flow * sol.paths[path_id].cost for path_id, flow in sol.flows.items() if flow > FLOW_EPSILON
    )
    placement_cost = math.fsum(host.trust.value for host in hosts.values())
    return replace(
        sol,
        objective_value=path_cost + gamma * placement_cost,
        bw_cost=bw_cost,
        bw_revenue=req.total_bw,
        cpu_cost=cpu_cost,
        cpu_revenue=req.total_cpu,
    )


def apply_embedding(
    net: SubstrateNetwork,
    req: ServiceRequest,
    sol: EmbeddingSolution,
    mode: TrustMode = TrustMode.NONE,
) -> SubstrateNetwork:
    """
    Reserve the CPU and bandwidth an embedding uses.

    Returns a new network; `net` itself is never modified.

    Raises:
        InvalidEmbeddingError: If the solution violates any constraint or the request is already admitted
    """
    if req.id in net.allocations:
        raise InvalidEmbeddingError(f"Request {req.id} is already embedded")
    validation = validate_solution(net, req, sol, mode)
    if not validation.is_valid:
        families = sorted(family.value for family in validation.families())
        raise InvalidEmbeddingError(f"Embedding of {req.id} violates {', '.join(families)}")

    # Amounts within tolerance of a residual are clipped to it so the
    # effective residuals never go negative.
    cpu = {
        node_id: min(used, net.residual_cpu(node_id))
        for node_id, used in _cpu_usage(req, sol).items()
        if used > 0
    }
    bw = {
        key: min(used, net.residual_bw(key))
        for key, used in _bw_usage(sol).items()
    }
    allocations = dict(net.allocations)
    allocations[req.id] = Allocation(cpu=cpu, bw=bw)
    logger.debug("Applied %s: %d hosts, %d links", req.id, len(cpu), len(bw))
    return net.with_allocations(allocations)


def release_embedding(net: SubstrateNetwork, request_id: str) -> SubstrateNetwork:
    """
    Give back everything `request_id` holds.

    Raises:
        StructuralError: If the request is not embedded in `net`
    """
    if request_id not in net.allocations:
        raise StructuralError(f"Request {request_id} is not embedded")
    allocations = {rid: alloc for rid, alloc in net.allocations.items() if rid != request_id}
    return net.with_allocations(allocations)
