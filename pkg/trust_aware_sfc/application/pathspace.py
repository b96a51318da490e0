"""
Augmented graphs, k-shortest augmented paths and path trust.

A commodity (i, j) is routed over an augmented path: a virtual source edge
(i, u) to an eligible host of i, a simple substrate path from u to v, and a
virtual sink edge (v, j). Augmented edges cost nothing, so a path's cost is
its substrate transport cost and a colocation path (u == v) costs 0.
"""

from __future__ import annotations

import logging
import math
import zlib
from typing import Callable, Iterable, Iterator, Mapping

import networkx as nx
import numpy as np

from trust_aware_sfc.domain.models import (
    FULL_TRUST,
    AugmentedGraph,
    AugmentedPath,
    Commodity,
    LinkKey,
    MissingPathTrustError,
    PathTrustPolicy,
    ServiceRequest,
    StructuralError,
    SubstrateNetwork,
    TrustValue,
    VNF,
    link_key,
)

logger = logging.getLogger(__name__)

EdgeCost = Callable[[str, str], float]
PathUniverse = dict[Commodity, list[AugmentedPath]]

_SOURCE = "source"
_SINK = "sink"
# Relative tolerance used to detect equal-cost ties past the k-th path.
_TIE_TOLERANCE = 1e-9


def unit_hop(u: str, v: str) -> float:
    return 1.0


def eligible_hosts(net: SubstrateNetwork, vnf: VNF, trust_aware: bool) -> tuple[str, ...]:
    """Servers with enough residual CPU for `vnf` and, when trust-aware, enough trust."""
    hosts = []
    for node in net.servers:
        if net.residual_cpu(node.id) < vnf.cpu_demand:
            continue
        if trust_aware and node.trust.value < vnf.trust_req.value:
            continue
        hosts.append(node.id)
    return tuple(sorted(hosts))


def build_augmented_graph(
    net: SubstrateNetwork,
    req: ServiceRequest,
    commodity: Commodity,
    trust_aware: bool = True,
) -> AugmentedGraph:
    if commodity not in req.commodities:
        raise StructuralError(f"Request {req.id} has no virtual link {commodity}")
    src, dst = commodity
    return AugmentedGraph(
        base=net,
        commodity=commodity,
        source_hosts=eligible_hosts(net, req.vnf(src), trust_aware),
        sink_hosts=eligible_hosts(net, req.vnf(dst), trust_aware),
    )


def _path_cost(nodes: tuple[str, ...], edge_cost: EdgeCost) -> float:
    return math.fsum(edge_cost(u, v) for u, v in zip(nodes, nodes[1:]))


def _routing_digraph(g: AugmentedGraph, edge_cost: EdgeCost) -> nx.DiGraph:
    digraph = nx.DiGraph()
    digraph.add_node((_SOURCE,))
    digraph.add_node((_SINK,))
    for key in g.base.links:
        u, v = key
        digraph.add_edge(u, v, weight=edge_cost(u, v))
        digraph.add_edge(v, u, weight=edge_cost(v, u))
    for u in g.source_hosts:
        digraph.add_edge((_SOURCE,), u, weight=0.0)
    for v in g.sink_hosts:
        digraph.add_edge(v, (_SINK,), weight=0.0)
    return digraph


def _simple_paths_by_cost(g: AugmentedGraph, edge_cost: EdgeCost) -> Iterator[tuple[str, ...]]:
    if not g.source_hosts or not g.sink_hosts:
        return
    digraph = _routing_digraph(g, edge_cost)
    try:
        for route in nx.shortest_simple_paths(digraph, (_SOURCE,), (_SINK,), weight="weight"):
            yield tuple(route[1:-1])
    except nx.NetworkXNoPath:
        return


def k_shortest_augmented_paths(
    g: AugmentedGraph,
    k: int | None,
    edge_cost: EdgeCost = unit_hop,
) -> list[AugmentedPath]:
    """
    The k cheapest augmented paths of a commodity, cheapest first.

    Equal-cost paths are ordered by their substrate node-id sequence, so the
    result is always a prefix of the full enumeration sorted by
    (cost, node ids). `k=None` enumerates every path.

    Args:
        g: Augmented graph of one commodity
        k: Number of paths, or None for all of them
        edge_cost: Cost of traversing substrate arc (u, v)

    Returns:
        Up to k paths; fewer only if fewer exist

    Raises:
        ValueError: If k < 1
    """
    if k is not None and k < 1:
        raise ValueError(f"k must be at least 1, got {k}")

    found: list[tuple[float, tuple[str, ...]]] = []
    for nodes in _simple_paths_by_cost(g, edge_cost):
        cost = _path_cost(nodes, edge_cost)
        if k is not None and len(found) >= k:
            kth_cost = found[k - 1][0]
            if cost > kth_cost + _TIE_TOLERANCE * max(1.0, abs(kth_cost)):
                break
        found.append((cost, nodes))

    found.sort()
    selected = found if k is None else found[:k]
    return [
        AugmentedPath(id="", commodity=g.commodity, nodes=nodes, cost=cost)
        for cost, nodes in selected
    ]


def enumerate_augmented_paths(g: AugmentedGraph, edge_cost: EdgeCost = unit_hop) -> list[tuple[float, tuple[str, ...]]]:
    """Every augmented path by depth-first search, sorted by (cost, node ids)."""
    graph = nx.Graph()
    graph.add_nodes_from(g.base.nodes)
    graph.add_edges_from(g.base.links)
    found = []
    for u in g.source_hosts:
        for v in g.sink_hosts:
            if u == v:
                found.append((0.0, (u,)))
                continue
            for route in nx.all_simple_paths(graph, u, v):
                nodes = tuple(route)
                found.append((_path_cost(nodes, edge_cost), nodes))
    return sorted(found)


class PathTrustTable:
    """
    Trust per substrate path, keyed by the path's undirected edge set so a
    path and its reverse share one value.

    A table built with a seed draws each missing entry from its own
    counter-based stream derived from (seed, key), so the value of a path
    does not depend on which other paths were looked up before it. A table
    without a seed is closed: a missing entry is an error.
    """

    def __init__(
        self,
        entries: Mapping[str, float] | None = None,
        seed: int | None = None,
        bounds: tuple[float, float] = (0.5, 1.0),
    ):
        low, high = bounds
        if not (0.0 <= low <= high <= 1.0):
            raise ValueError(f"Path trust bounds must satisfy 0 <= low <= high <= 1, got {bounds}")
        self._entries: dict[str, TrustValue] = {
            key: TrustValue(float(value)) for key, value in (entries or {}).items()
        }
        self.seed = seed
        self.bounds = (float(low), float(high))

    @staticmethod
    def key_of(edges: Iterable[LinkKey]) -> str:
        return ";".join(f"{u}|{v}" for u, v in sorted(link_key(*edge) for edge in edges))

    @classmethod
    def path_key(cls, path: AugmentedPath) -> str:
        return cls.key_of(path.edge_keys)

    @property
    def is_closed(self) -> bool:
        return self.seed is None

    def _draw(self, key: str) -> TrustValue:
        low, high = self.bounds
        rng = np.random.default_rng([self.seed, zlib.crc32(key.encode("utf-8"))])
        return TrustValue(float(rng.uniform(low, high)))

    def trust_of(self, path: AugmentedPath) -> TrustValue:
        if path.is_colocation:
            return FULL_TRUST
        key = self.path_key(path)
        value = self._entries.get(key)
        if value is None:
            if self.is_closed:
                raise MissingPathTrustError(f"No trust assigned to substrate path {key}")
            value = self._draw(key)
            self._entries[key] = value
        return value

    def __contains__(self, key: str) -> bool:
        return key in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def to_dict(self) -> dict[str, float]:
        return {key: value.value for key, value in sorted(self._entries.items())}


def path_trust(
    path: AugmentedPath,
    policy: PathTrustPolicy,
    net: SubstrateNetwork | None = None,
    table: PathTrustTable | None = None,
) -> TrustValue:
    """
    Aggregate trust of a path under `policy`. Colocation paths are fully trusted.

    Raises:
        MissingPathTrustError: If `policy` is assigned and the table has no entry
        ValueError: If the policy's input (network or table) is not given
    """
    if path.is_colocation:
        return FULL_TRUST
    if policy is PathTrustPolicy.ASSIGNED:
        if table is None:
            raise MissingPathTrustError("Assigned path trust requires a path-trust table")
        return table.trust_of(path)
    if net is None:
        raise ValueError(f"Policy {policy} needs the substrate network")
    trusts = [net.link(u, v).trust.value for u, v in path.substrate_edges]
    if policy is PathTrustPolicy.MIN_LINK:
        return TrustValue(min(trusts))
    return TrustValue(math.prod(trusts))


def build_path_universe(
    net: SubstrateNetwork,
    req: ServiceRequest,
    k: int | None,
    trust_aware: bool,
    policy: PathTrustPolicy | None = PathTrustPolicy.MIN_LINK,
    table: PathTrustTable | None = None,
    edge_cost: EdgeCost = unit_hop,
) -> PathUniverse:
    """
    Candidate paths of every commodity of `req`.

    Path ids are `"{i}->{j}#{rank}"`, so the universe for k is a prefix of
    the universe for any larger k. With `policy=None` path trust is not
    evaluated and every path carries full trust.
    """
    universe: PathUniverse = {}
    for commodity in req.commodities:
        graph = build_augmented_graph(net, req, commodity, trust_aware)
        ranked = []
        for rank, path in enumerate(k_shortest_augmented_paths(graph, k, edge_cost)):
            trust = FULL_TRUST if policy is None else path_trust(path, policy, net, table)
            ranked.append(AugmentedPath(
                id=f"{commodity[0]}->{commodity[1]}#{rank}",
                commodity=commodity,
                nodes=path.nodes,
                cost=path.cost,
                trust=trust,
            ))
        universe[commodity] = ranked
    logger.debug(
        "Path universe for %s (k=%s): %s",
        req.id, k, {f"{i}->{j}": len(paths) for (i, j), paths in universe.items()},
    )
    return universe
