"""Builders shared by the unit and integration suites."""

import numpy as np

from trust_aware_sfc.domain.models import (
    AugmentedPath,
    EmbeddingSolution,
    NodeKind,
    ServiceRequest,
    SubstrateLink,
    SubstrateNetwork,
    SubstrateNode,
    TrustValue,
    VNF,
    VirtualLink,
)


def server(node_id: str, cpu: float = 10.0, trust: float = 1.0, residual: float | None = None) -> SubstrateNode:
    return SubstrateNode(node_id, NodeKind.SERVER, cpu, cpu if residual is None else residual, TrustValue(trust))


def switch(node_id: str) -> SubstrateNode:
    return SubstrateNode(node_id, NodeKind.SWITCH, 0.0, 0.0, TrustValue(1.0))


def link(u: str, v: str, capacity: float = 100.0, trust: float = 1.0, residual: float | None = None) -> SubstrateLink:
    return SubstrateLink(u, v, capacity, capacity if residual is None else residual, TrustValue(trust))


def vnf(vnf_id: str, cpu: float = 1.0, trust: float = 0.0) -> VNF:
    return VNF(vnf_id, cpu, TrustValue(trust))


def vlink(src: str, dst: str, bw: float = 10.0, trust: float = 0.0) -> VirtualLink:
    return VirtualLink(src, dst, bw, TrustValue(trust))


def request(vnfs: list[VNF], vlinks: list[VirtualLink], request_id: str = "r1", **kwargs) -> ServiceRequest:
    return ServiceRequest(request_id, tuple(vnfs), tuple(vlinks), **kwargs)


def line_network(
    s1_trust: float = 1.0,
    s2_trust: float = 1.0,
    link_trust: float = 1.0,
    capacity: float = 100.0,
    cpu: float = 10.0,
) -> SubstrateNetwork:
    """s1 - sw - s2"""
    return SubstrateNetwork.build(
        [server("s1", cpu, s1_trust), switch("sw"), server("s2", cpu, s2_trust)],
        [link("s1", "sw", capacity, link_trust), link("sw", "s2", capacity, link_trust)],
    )


def mesh_network() -> SubstrateNetwork:
    """Five nodes, three servers, several alternative routes between every server pair."""
    return SubstrateNetwork.build(
        [server("s1"), server("s2"), server("s3"), switch("w1"), switch("w2")],
        [
            link("s1", "w1", trust=0.9),
            link("s1", "w2", trust=0.6),
            link("w1", "s2", trust=0.8),
            link("w2", "s2", trust=0.7),
            link("w1", "w2", trust=0.95),
            link("s3", "w2", trust=0.75),
        ],
    )


def chain_solution(path_nodes: tuple[str, ...], flow: float, assignment: dict[str, str]) -> EmbeddingSolution:
    """Single-commodity a->b solution carried on one path."""
    path = AugmentedPath("a->b#0", ("a", "b"), path_nodes, float(len(path_nodes) - 1))
    return EmbeddingSolution(assignment=assignment, flows={path.id: flow}, paths={path.id: path})


def random_instance(seed: int, vnf_count: int = 3) -> tuple[SubstrateNetwork, ServiceRequest]:
    """Small random substrate and chain request, sized for the brute-force oracle."""
    rng = np.random.default_rng(seed)
    servers = []
    for name in ("s1", "s2", "s3"):
        residual = float(rng.uniform(3.0, 10.0))
        servers.append(server(name, 10.0, float(rng.uniform(0.2, 1.0)), residual))
    wiring = [("s1", "w1"), ("s2", "w1"), ("s2", "w2"), ("s3", "w2"), ("w1", "w2"), ("s1", "s3")]
    links = [
        link(u, v, float(rng.uniform(20.0, 100.0)), float(rng.uniform(0.5, 1.0)))
        for u, v in wiring
    ]
    net = SubstrateNetwork.build([*servers, switch("w1"), switch("w2")], links)
    vnfs = [
        vnf(f"v{i}", float(rng.uniform(0.5, 4.0)), float(rng.uniform(0.0, 0.8)))
        for i in range(vnf_count)
    ]
    vlinks = [
        vlink(f"v{i}", f"v{i + 1}", float(rng.uniform(5.0, 40.0)), float(rng.uniform(0.0, 0.8)))
        for i in range(vnf_count - 1)
    ]
    return net, request(vnfs, vlinks, f"rand-{seed}")
