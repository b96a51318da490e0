"""
Exhaustive reference solver for tiny instances.

Enumerates every placement that respects eligibility and CPU capacity and
solves the remaining flow problem over all simple substrate paths with
scipy's HiGHS backend. Shares no code path with the branch-and-bound solver
beyond the domain types and path trust.
"""

from __future__ import annotations

import itertools
import logging
import math
import time
from collections import defaultdict

import networkx as nx
import numpy as np
from scipy.optimize import linprog

from trust_aware_sfc.application.pathspace import PathTrustTable, path_trust
from trust_aware_sfc.application.validation import compute_accounting
from trust_aware_sfc.domain.models import (
    FLOW_EPSILON,
    AugmentedPath,
    EmbeddingSolution,
    OracleCapExceededError,
    PathTrustPolicy,
    ServiceRequest,
    SolveResult,
    SolveStats,
    SolveStatus,
    SubstrateNetwork,
    Variant,
)

logger = logging.getLogger(__name__)

DEFAULT_ASSIGNMENT_CAP = 100_000


def _candidate_hosts(net: SubstrateNetwork, req: ServiceRequest, variant: Variant) -> list[list[str]]:
    candidates = []
    for vnf in req.vnfs:
        hosts = [
            node.id
            for node in sorted(net.servers, key=lambda n: n.id)
            if net.residual_cpu(node.id) >= vnf.cpu_demand
            and (not variant.node_trust or node.trust.value >= vnf.trust_req.value)
        ]
        candidates.append(hosts)
    return candidates


def _fits(net: SubstrateNetwork, req: ServiceRequest, hosts: tuple[str, ...]) -> bool:
    load: dict[str, list[float]] = defaultdict(list)
    for vnf, host in zip(req.vnfs, hosts):
        load[host].append(vnf.cpu_demand)
    return all(math.fsum(amounts) <= net.residual_cpu(host) for host, amounts in load.items())


def brute_force_oracle(
    net: SubstrateNetwork,
    req: ServiceRequest,
    variant: Variant = Variant.PB_SCE,
    trust_policy: PathTrustPolicy = PathTrustPolicy.MIN_LINK,
    table: PathTrustTable | None = None,
    gamma: float = 1.0,
    cap: int = DEFAULT_ASSIGNMENT_CAP,
) -> SolveResult:
    """
    Global optimum by enumeration.

    Args:
        net: Substrate network
        req: Request to embed
        variant: Which trust constraints apply
        trust_policy: How path trust is obtained (only used by PB_TASCE)
        table: Path-trust table for the assigned policy
        gamma: Weight of the processing cost term
        cap: Largest number of candidate placements the oracle accepts

    Returns:
        SolveResult, optimal or infeasible

    Raises:
        OracleCapExceededError: If the placement space exceeds `cap`
    """
    started = time.perf_counter()
    candidates = _candidate_hosts(net, req, variant)
    space = math.prod(len(hosts) for hosts in candidates)
    if space > cap:
        raise OracleCapExceededError(f"{space} candidate placements exceed the oracle cap of {cap}")

    graph = nx.Graph()
    graph.add_nodes_from(net.nodes)
    graph.add_edges_from(net.links)
    link_index = {key: position for position, key in enumerate(sorted(net.links))}
    capacities = np.array([net.residual_bw(key) for key in sorted(net.links)])
    route_cache: dict[tuple[str, str], list[tuple[str, ...]]] = {}

    def routes(u: str, v: str) -> list[tuple[str, ...]]:
        if (u, v) not in route_cache:
            if u == v:
                route_cache[(u, v)] = [(u,)]
            else:
                route_cache[(u, v)] = sorted(tuple(p) for p in nx.all_simple_paths(graph, u, v))
        return route_cache[(u, v)]

    best_objective = math.inf
    best: EmbeddingSolution | None = None
    evaluated = 0
    for hosts in itertools.product(*candidates):
        if not _fits(net, req, hosts):
            continue
        evaluated += 1
        placement = dict(zip((vnf.id for vnf in req.vnfs), hosts))
        placement_cost = gamma * math.fsum(net.node(host).trust.value for host in hosts)
        if placement_cost >= best_objective:
            continue

        columns: list[AugmentedPath] = []
        feasible = True
        for vlink in req.vlinks:
            usable = []
            for nodes in routes(placement[vlink.src], placement[vlink.dst]):
                path = AugmentedPath(f"{vlink.src}->{vlink.dst}@{len(usable)}", vlink.commodity, nodes, len(nodes) - 1.0)
                if variant.path_trust:
                    trust = path_trust(path, trust_policy, net, table)
                    if trust.value < vlink.trust_req.value:
                        continue
                    path = AugmentedPath(path.id, path.commodity, path.nodes, path.cost, trust)
                usable.append(path)
            if not usable and vlink.bw_demand > 0:
                feasible = False
                break
            columns.extend(usable)
        if not feasible:
            continue

        flow_values = np.zeros(len(columns))
        flow_cost = 0.0
        if columns:
            c = np.array([path.cost for path in columns])
            a_eq = np.zeros((len(req.vlinks), len(columns)))
            b_eq = np.array([vlink.bw_demand for vlink in req.vlinks])
            row_of = {vlink.commodity: r for r, vlink in enumerate(req.vlinks)}
            a_ub = np.zeros((len(link_index), len(columns)))
            for col, path in enumerate(columns):
                a_eq[row_of[path.commodity], col] = 1.0
                for key in path.edge_keys:
                    a_ub[link_index[key], col] = 1.0
            result = linprog(
                c,
                A_ub=a_ub if a_ub.size else None,
                b_ub=capacities if a_ub.size else None,
                A_eq=a_eq,
                b_eq=b_eq,
                bounds=(0, None),
                method="highs",
            )
            if result.status != 0:
                continue
            flow_values, flow_cost = result.x, float(result.fun)

        objective = flow_cost + placement_cost
        if objective < best_objective:
            best_objective = objective
            flows = {path.id: float(value) for path, value in zip(columns, flow_values) if value > FLOW_EPSILON}
            best = EmbeddingSolution(
                assignment=placement,
                flows=flows,
                paths={path.id: path for path in columns if path.id in flows},
            )

    stats = SolveStats(nodes_explored=evaluated, wall_time=time.perf_counter() - started)
    if best is None:
        return SolveResult(SolveStatus.INFEASIBLE, stats=stats)
    solution = compute_accounting(net, req, best, gamma)
    logger.debug("Oracle evaluated %d placements, optimum %.6f", evaluated, best_objective)
    return SolveResult(SolveStatus.OPTIMAL, objective=best_objective, solution=solution, stats=stats)
