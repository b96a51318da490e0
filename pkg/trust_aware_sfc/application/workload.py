"""
Experiment inputs: the fat-tree evaluation zone, SFC request streams and
path-trust draws, all derived from one seed.

The seed is split into four independent numpy streams (topology, requests,
trusts, arrivals), so changing k or the variant never perturbs the request
stream.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from trust_aware_sfc.application.pathspace import PathTrustTable, PathUniverse
from trust_aware_sfc.domain.models import (
    FunctionType,
    NodeKind,
    PathTrustPolicy,
    ServiceRequest,
    SubstrateLink,
    SubstrateNetwork,
    SubstrateNode,
    TrustValue,
    VNF,
    Variant,
    VirtualLink,
)

logger = logging.getLogger(__name__)

ZONE_WIRING = (
    "per pod: every ToR wired to every aggregation switch of its pod; "
    "every aggregation switch wired to every zone-core switch; "
    "inter-rack capacity on all switch-switch links"
)

DEFAULT_TEMPLATES: list[list[FunctionType]] = [
    [FunctionType.FW, FunctionType.IDS, FunctionType.LB],
    [FunctionType.NAT, FunctionType.FW, FunctionType.DPI],
    [FunctionType.FW, FunctionType.VPN, FunctionType.VOPT],
]

# GHz·cores per Mbps of inbound traffic.
DEFAULT_PROFILES: dict[FunctionType, float] = {
    FunctionType.FW: 0.02,
    FunctionType.IDS: 0.04,
    FunctionType.DPI: 0.05,
    FunctionType.NAT: 0.01,
    FunctionType.LB: 0.01,
    FunctionType.VPN: 0.03,
    FunctionType.VOPT: 0.04,
}

Bounds = tuple[float, float]


class Distributions(BaseModel):
    """Uniform (low, high) bounds of every random draw."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    initial_util: Bounds = (0.3, 0.6)
    server_trust: Bounds = (0.2, 1.0)
    link_trust: Bounds = (0.5, 1.0)
    path_trust: Bounds = (0.5, 1.0)
    vnf_count: tuple[int, int] = (5, 9)
    inbound_mbps: Bounds = (50.0, 100.0)
    node_trust_req: Bounds = (0.2, 0.8)
    link_trust_req: Bounds = (0.2, 0.8)

    @field_validator("*")
    @classmethod
    def ordered(cls, bounds: tuple[float, float]) -> tuple[float, float]:
        low, high = bounds
        if low > high:
            raise ValueError(f"low bound {low} exceeds high bound {high}")
        return bounds

    @field_validator(
        "initial_util", "server_trust", "link_trust", "path_trust", "node_trust_req", "link_trust_req"
    )
    @classmethod
    def unit_interval(cls, bounds: Bounds) -> Bounds:
        if not (0.0 <= bounds[0] and bounds[1] <= 1.0):
            raise ValueError("bounds must lie within [0, 1]")
        return bounds

    @field_validator("vnf_count")
    @classmethod
    def at_least_one_vnf(cls, bounds: tuple[int, int]) -> tuple[int, int]:
        if bounds[0] < 1:
            raise ValueError("a request needs at least one VNF")
        return bounds

    @field_validator("inbound_mbps")
    @classmethod
    def non_negative_rate(cls, bounds: Bounds) -> Bounds:
        if bounds[0] < 0:
            raise ValueError("traffic rate must be non-negative")
        return bounds


class ExperimentConfig(BaseModel):
    """Every parameter of an experiment run. `{}` is a valid config: all fields default."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    seed: int = Field(1, ge=0)
    pods: int = Field(4, ge=1)
    tors_per_pod: int = Field(2, ge=1)
    aggs_per_pod: int = Field(2, ge=1)
    servers_per_tor: int = Field(2, ge=1)
    zone_cores: int = Field(2, ge=1)
    cores_per_server: int = Field(8, ge=1)
    core_ghz: float = Field(2.0, gt=0)
    inter_rack_gbps: float = Field(16.0, gt=0)
    tor_server_gbps: float = Field(8.0, gt=0)
    distributions: Distributions = Distributions()
    templates: list[list[FunctionType]] = Field(default_factory=lambda: [list(t) for t in DEFAULT_TEMPLATES])
    profiles: dict[FunctionType, float] = Field(default_factory=lambda: dict(DEFAULT_PROFILES))
    k: int | None = Field(12, ge=1, description="Paths per commodity; null enumerates all paths")
    variant: Variant = Variant.PB_SCE
    gamma: float = Field(1.0, ge=0)
    trust_policy: PathTrustPolicy = PathTrustPolicy.ASSIGNED
    couple_destination: bool = True
    big_m_scale: float = Field(1.0, ge=1.0)
    mean_interarrival: float = Field(1.0, gt=0)
    mean_holding: float = Field(20.0, gt=0)
    request_count: int = Field(500, ge=0)
    window: float = Field(25.0, gt=0)
    solver_time_limit: float = Field(10.0, gt=0)
    node_limit: int = Field(100_000, ge=1)
    fixed_vnf_count: int | None = Field(None, ge=1)
    workers: int = Field(1, ge=1)

    @field_validator("templates")
    @classmethod
    def templates_not_empty(cls, templates: list[list[FunctionType]]) -> list[list[FunctionType]]:
        if not templates or any(not template for template in templates):
            raise ValueError("need at least one non-empty template")
        return templates

    @field_validator("profiles")
    @classmethod
    def profiles_non_negative(cls, profiles: dict[FunctionType, float]) -> dict[FunctionType, float]:
        for function_type, coefficient in profiles.items():
            if coefficient < 0:
                raise ValueError(f"profile coefficient of {function_type} is negative")
        return profiles

    @model_validator(mode="after")
    def templates_have_profiles(self) -> "ExperimentConfig":
        used = {function_type for template in self.templates for function_type in template}
        missing = sorted(used - set(self.profiles))
        if missing:
            raise ValueError(f"no profile coefficient for {', '.join(missing)}")
        return self

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        return cls.model_validate_json(Path(path).read_text(encoding="utf-8"))

    def with_profiles_file(self, path: str | Path) -> "ExperimentConfig":
        """Config with the profile table replaced by a JSON `{function_type: coefficient}` file."""
        table = json.loads(Path(path).read_text(encoding="utf-8"))
        return self.model_validate({**self.model_dump(), "profiles": {**self.profiles, **table}})

    @property
    def server_cpu(self) -> float:
        return self.cores_per_server * self.core_ghz


@dataclass
class WorkloadStreams:
    topology: np.random.Generator
    requests: np.random.Generator
    trusts: np.random.Generator
    arrivals: np.random.Generator

    @classmethod
    def from_seed(cls, seed: int) -> "WorkloadStreams":
        topology, requests, trusts, arrivals = np.random.SeedSequence(seed).spawn(4)
        return cls(
            topology=np.random.default_rng(topology),
            requests=np.random.default_rng(requests),
            trusts=np.random.default_rng(trusts),
            arrivals=np.random.default_rng(arrivals),
        )


def _uniform(rng: np.random.Generator, bounds: Bounds) -> float:
    low, high = bounds
    return float(rng.uniform(low, high)) if high > low else float(low)


def generate_fat_tree_zone(cfg: ExperimentConfig, rng: np.random.Generator | None = None) -> SubstrateNetwork:
    """
    One zone of a fat-tree data center.

    Each pod has ToR and aggregation switches with servers under every ToR;
    the pods' aggregation switches meet at the zone-core switches. Servers
    start with background utilization drawn from `initial_util`.
    """
    rng = rng or WorkloadStreams.from_seed(cfg.seed).topology
    dist = cfg.distributions
    inter_rack = cfg.inter_rack_gbps * 1000.0
    tor_server = cfg.tor_server_gbps * 1000.0
    nodes: list[SubstrateNode] = []
    links: list[SubstrateLink] = []

    def switch(node_id: str) -> None:
        nodes.append(SubstrateNode(node_id, NodeKind.SWITCH, 0.0, 0.0, TrustValue(1.0)))

    def wire(u: str, v: str, capacity: float) -> None:
        trust = TrustValue(_uniform(rng, dist.link_trust))
        links.append(SubstrateLink(u, v, capacity, capacity, trust))

    cores = [f"core-{c}" for c in range(cfg.zone_cores)]
    for core in cores:
        switch(core)
    for pod in range(cfg.pods):
        aggs = [f"agg-p{pod}-{a}" for a in range(cfg.aggs_per_pod)]
        for agg in aggs:
            switch(agg)
            for core in cores:
                wire(agg, core, inter_rack)
        for tor_index in range(cfg.tors_per_pod):
            tor = f"tor-p{pod}-{tor_index}"
            switch(tor)
            for agg in aggs:
                wire(tor, agg, inter_rack)
            for s in range(cfg.servers_per_tor):
                server = f"srv-p{pod}-t{tor_index}-{s}"
                utilization = _uniform(rng, dist.initial_util)
                total = cfg.server_cpu
                trust = TrustValue(_uniform(rng, dist.server_trust))
                nodes.append(SubstrateNode(server, NodeKind.SERVER, total, total * (1.0 - utilization), trust))
                wire(server, tor, tor_server)

    network = SubstrateNetwork.build(nodes, links)
    logger.debug("Generated zone: %d servers, %d switches, %d links",
                 len(network.servers), len(nodes) - len(network.servers), len(links))
    return network


def generate_request(
    cfg: ExperimentConfig,
    rng: np.random.Generator,
    request_id: str = "r0",
    arrival_time: float = 0.0,
    holding_time: float = 1.0,
) -> ServiceRequest:
    """
    One linear SFC drawn from a uniformly chosen template.

    Every vlink carries the request's inbound rate; each VNF's CPU demand is
    that rate times its function type's profile coefficient.
    """
    dist = cfg.distributions
    low, high = dist.vnf_count
    count = int(rng.integers(low, high + 1))
    if cfg.fixed_vnf_count is not None:
        count = cfg.fixed_vnf_count
    rate = _uniform(rng, dist.inbound_mbps)
    template = cfg.templates[int(rng.integers(len(cfg.templates)))]

    vnfs = []
    for position in range(count):
        function_type = template[position % len(template)]
        vnfs.append(VNF(
            id=f"v{position}",
            cpu_demand=rate * cfg.profiles[function_type],
            trust_req=TrustValue(_uniform(rng, dist.node_trust_req)),
            function_type=function_type,
        ))
    vlinks = [
        VirtualLink(
            src=vnfs[position].id,
            dst=vnfs[position + 1].id,
            bw_demand=rate,
            trust_req=TrustValue(_uniform(rng, dist.link_trust_req)),
        )
        for position in range(count - 1)
    ]
    return ServiceRequest(request_id, tuple(vnfs), tuple(vlinks), arrival_time, holding_time)


def generate_request_stream(cfg: ExperimentConfig, streams: WorkloadStreams | None = None) -> list[ServiceRequest]:
    """Poisson arrivals with exponential holding times, `cfg.request_count` requests."""
    streams = streams or WorkloadStreams.from_seed(cfg.seed)
    requests = []
    clock = 0.0
    for n in range(cfg.request_count):
        clock += float(streams.arrivals.exponential(cfg.mean_interarrival))
        holding = max(float(streams.arrivals.exponential(cfg.mean_holding)), 1e-9)
        requests.append(generate_request(cfg, streams.requests, f"req-{n:05d}", clock, holding))
    return requests


def assign_path_trusts(
    universe: PathUniverse | Iterable[PathUniverse],
    rng: np.random.Generator,
    bounds: Bounds = (0.5, 1.0),
    table: PathTrustTable | None = None,
) -> PathTrustTable:
    """
    Draw one trust value per distinct substrate path of the universe.

    A new table is seeded from `rng`; pass `table` to extend an existing
    one. Colocation paths are never entered (their trust is fixed at 1).
    """
    if table is None:
        table = PathTrustTable(seed=int(rng.integers(2**63 - 1)), bounds=bounds)
    universes = [universe] if isinstance(universe, dict) else list(universe)
    for one in universes:
        for paths in one.values():
            for path in paths:
                if not path.is_colocation:
                    table.trust_of(path)
    return table
