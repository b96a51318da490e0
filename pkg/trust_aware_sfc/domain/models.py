from __future__ import annotations

import math
from dataclasses import dataclass, field
from trust_aware_sfc._compat import StrEnum
from typing import Mapping

# Absolute feasibility tolerance shared by the validator and the solvers.
FEASIBILITY_TOLERANCE = 1e-6
# Flows below this are treated as zero when solutions are extracted.
FLOW_EPSILON = 1e-9

LinkKey = tuple[str, str]
Commodity = tuple[str, str]


def link_key(u: str, v: str) -> LinkKey:
    """Canonical key of the undirected substrate link between u and v."""
    return (u, v) if u <= v else (v, u)


class NodeKind(StrEnum):
    SERVER = "server"
    SWITCH = "switch"


class FunctionType(StrEnum):
    FW = "FW"
    IDS = "IDS"
    DPI = "DPI"
    NAT = "NAT"
    LB = "LB"
    VPN = "VPN"
    VOPT = "VOPT"


class TrustMode(StrEnum):
    """Which trust constraint families a validator checks."""
    NONE = "none"
    NODE_TRUST = "node_trust"
    NODE_AND_LINK_TRUST = "node_and_link_trust"


class Variant(StrEnum):
    PB_SCE = "PB_SCE"
    PB_NODE_TRUST = "PB_NODE_TRUST"
    PB_TASCE = "PB_TASCE"

    @property
    def node_trust(self) -> bool:
        return self is not Variant.PB_SCE

    @property
    def path_trust(self) -> bool:
        return self is Variant.PB_TASCE

    @property
    def trust_mode(self) -> TrustMode:
        if self is Variant.PB_TASCE:
            return TrustMode.NODE_AND_LINK_TRUST
        if self is Variant.PB_NODE_TRUST:
            return TrustMode.NODE_TRUST
        return TrustMode.NONE

    @property
    def short_name(self) -> str:
        return {"PB_SCE": "SCE", "PB_NODE_TRUST": "NT-SCE", "PB_TASCE": "TASCE"}[self.value]


class PathTrustPolicy(StrEnum):
    MIN_LINK = "min_link"
    PRODUCT_LINK = "product_link"
    ASSIGNED = "assigned"


class ConstraintFamily(StrEnum):
    PLACEMENT = "placement"
    DEMAND = "demand"
    COUPLING_SRC = "coupling_src"
    COUPLING_DST = "coupling_dst"
    NODE_TRUST = "node_trust"
    PATH_TRUST = "path_trust"
    CPU_CAP = "cpu_cap"
    BW_CAP = "bw_cap"
    FLOW_CONSERVATION = "flow_conservation"
    DOMAIN = "domain"


# --- errors ---

class StructuralError(ValueError):
    """A solution refers to nodes, links, VNFs or paths that do not exist."""


class InvalidEmbeddingError(ValueError):
    """An embedding with constraint violations was applied to a network."""


class MissingPathTrustError(ValueError):
    """Assigned path trust was requested for a path absent from the table."""


class OracleCapExceededError(ValueError):
    """The brute-force oracle refused an instance above its assignment cap."""


# --- value objects ---

@dataclass(frozen=True, slots=True, order=True)
class TrustValue:
    value: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.value <= 1.0) or math.isnan(self.value):
            raise ValueError(f"Trust must lie in [0, 1], got {self.value}")

    def __float__(self) -> float:
        return self.value

    def satisfies(self, requirement: "TrustValue") -> bool:
        return self.value >= requirement.value


FULL_TRUST = TrustValue(1.0)


@dataclass(frozen=True, slots=True)
class SubstrateNode:
    id: str
    kind: NodeKind
    total_cpu: float
    residual_cpu: float
    trust: TrustValue

    def __post_init__(self) -> None:
        if self.kind is NodeKind.SWITCH and self.total_cpu != 0:
            raise ValueError(f"Switch {self.id} cannot carry compute")
        if not (0.0 <= self.residual_cpu <= self.total_cpu):
            raise ValueError(
                f"Node {self.id}: residual CPU {self.residual_cpu} outside [0, {self.total_cpu}]"
            )

    @property
    def is_server(self) -> bool:
        return self.kind is NodeKind.SERVER


@dataclass(frozen=True, slots=True)
class SubstrateLink:
    u: str
    v: str
    capacity: float
    residual_bw: float
    trust: TrustValue

    def __post_init__(self) -> None:
        if self.u == self.v:
            raise ValueError(f"Self-loop on substrate node {self.u}")
        if not (0.0 <= self.residual_bw <= self.capacity):
            raise ValueError(
                f"Link {self.u}-{self.v}: residual bandwidth {self.residual_bw} "
                f"outside [0, {self.capacity}]"
            )

    @property
    def key(self) -> LinkKey:
        return link_key(self.u, self.v)


@dataclass(frozen=True, slots=True)
class Allocation:
    """Resources one admitted request holds: CPU per node, bandwidth per link."""
    cpu: Mapping[str, float]
    bw: Mapping[LinkKey, float]


@dataclass(frozen=True, slots=True)
class SubstrateNetwork:
    """
    Undirected capacitated substrate graph.

    Node and link objects keep the residuals the network was built with;
    resources held by admitted requests live in the `allocations` ledger and
    the effective residuals are derived from both with `math.fsum`. Because
    `fsum` is exactly rounded, the effective residuals depend only on the set
    of allocations, so releasing a request restores the previous values bit
    for bit.
    """
    nodes: Mapping[str, SubstrateNode]
    links: Mapping[LinkKey, SubstrateLink]
    allocations: Mapping[str, Allocation] = field(default_factory=dict)
    _cpu: dict[str, float] = field(init=False, repr=False, compare=False)
    _bw: dict[LinkKey, float] = field(init=False, repr=False, compare=False)
    _adjacency: dict[str, tuple[str, ...]] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        adjacency: dict[str, list[str]] = {node_id: [] for node_id in self.nodes}
        for key, link in self.links.items():
            if key != link.key:
                raise ValueError(f"Link stored under {key} but its key is {link.key}")
            for end in key:
                if end not in self.nodes:
                    raise ValueError(f"Link {key} refers to unknown node {end}")
            adjacency[link.u].append(link.v)
            adjacency[link.v].append(link.u)

        cpu_held: dict[str, list[float]] = {}
        bw_held: dict[LinkKey, list[float]] = {}
        for allocation in self.allocations.values():
            for node_id, amount in allocation.cpu.items():
                cpu_held.setdefault(node_id, []).append(amount)
            for key, amount in allocation.bw.items():
                bw_held.setdefault(key, []).append(amount)

        cpu = {
            node_id: math.fsum([node.residual_cpu, *(-a for a in cpu_held.get(node_id, ()))])
            for node_id, node in self.nodes.items()
        }
        bw = {
            key: math.fsum([link.residual_bw, *(-a for a in bw_held.get(key, ()))])
            for key, link in self.links.items()
        }
        object.__setattr__(self, "_cpu", cpu)
        object.__setattr__(self, "_bw", bw)
        object.__setattr__(self, "_adjacency", {n: tuple(sorted(a)) for n, a in adjacency.items()})

    @classmethod
    def build(cls, nodes: list[SubstrateNode], links: list[SubstrateLink]) -> "SubstrateNetwork":
        node_map: dict[str, SubstrateNode] = {}
        for node in nodes:
            if node.id in node_map:
                raise ValueError(f"Duplicate substrate node {node.id}")
            node_map[node.id] = node
        link_map: dict[LinkKey, SubstrateLink] = {}
        for link in links:
            if link.key in link_map:
                raise ValueError(f"Duplicate substrate link {link.key}")
            link_map[link.key] = link
        return cls(nodes=node_map, links=link_map)

    # --- lookups ---
    def node(self, node_id: str) -> SubstrateNode:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise StructuralError(f"Unknown substrate node {node_id}") from None

    def link(self, u: str, v: str) -> SubstrateLink:
        try:
            return self.links[link_key(u, v)]
        except KeyError:
            raise StructuralError(f"No substrate link between {u} and {v}") from None

    def has_link(self, u: str, v: str) -> bool:
        return link_key(u, v) in self.links

    def neighbors(self, node_id: str) -> tuple[str, ...]:
        return self._adjacency[node_id]

    def residual_cpu(self, node_id: str) -> float:
        return self._cpu[node_id]

    def residual_bw(self, u: str, v: str | None = None) -> float:
        key = link_key(u, v) if v is not None else u  # type: ignore[assignment]
        return self._bw[key]  # type: ignore[index]

    @property
    def servers(self) -> list[SubstrateNode]:
        return [node for node in self.nodes.values() if node.is_server]

    @property
    def total_server_cpu(self) -> float:
        return math.fsum(node.total_cpu for node in self.servers)

    @property
    def used_server_cpu(self) -> float:
        return math.fsum(node.total_cpu - self._cpu[node.id] for node in self.servers)

    def cpu_utilization(self) -> float:
        total = self.total_server_cpu
        return self.used_server_cpu / total if total > 0 else 0.0

    def residual_snapshot(self) -> tuple[dict[str, float], dict[LinkKey, float]]:
        return dict(self._cpu), dict(self._bw)

    def with_allocations(self, allocations: Mapping[str, Allocation]) -> "SubstrateNetwork":
        return SubstrateNetwork(nodes=self.nodes, links=self.links, allocations=dict(allocations))

    def settled(self) -> "SubstrateNetwork":
        """The same network with the ledger folded into the node and link residuals."""
        nodes = {
            node_id: SubstrateNode(node.id, node.kind, node.total_cpu, self._cpu[node_id], node.trust)
            for node_id, node in self.nodes.items()
        }
        links = {
            key: SubstrateLink(link.u, link.v, link.capacity, self._bw[key], link.trust)
            for key, link in self.links.items()
        }
        return SubstrateNetwork(nodes=nodes, links=links)


@dataclass(frozen=True, slots=True)
class VNF:
    id: str
    cpu_demand: float
    trust_req: TrustValue
    function_type: FunctionType = FunctionType.FW

    def __post_init__(self) -> None:
        if self.cpu_demand < 0:
            raise ValueError(f"VNF {self.id}: negative CPU demand")


@dataclass(frozen=True, slots=True)
class VirtualLink:
    src: str
    dst: str
    bw_demand: float
    trust_req: TrustValue

    def __post_init__(self) -> None:
        if self.src == self.dst:
            raise ValueError(f"Virtual link {self.src}->{self.dst} is a self-loop")
        if self.bw_demand < 0:
            raise ValueError(f"Virtual link {self.src}->{self.dst}: negative demand")

    @property
    def commodity(self) -> Commodity:
        return (self.src, self.dst)


@dataclass(frozen=True, slots=True)
class ServiceRequest:
    id: str
    vnfs: tuple[VNF, ...]
    vlinks: tuple[VirtualLink, ...]
    arrival_time: float = 0.0
    holding_time: float = 1.0

    def __post_init__(self) -> None:
        ids = [vnf.id for vnf in self.vnfs]
        if len(set(ids)) != len(ids):
            raise ValueError(f"Request {self.id}: duplicate VNF ids")
        known = set(ids)
        seen: set[Commodity] = set()
        for vlink in self.vlinks:
            if vlink.src not in known or vlink.dst not in known:
                raise ValueError(f"Request {self.id}: virtual link {vlink.commodity} has unknown endpoint")
            if vlink.commodity in seen:
                raise ValueError(f"Request {self.id}: duplicate virtual link {vlink.commodity}")
            seen.add(vlink.commodity)
        if self.holding_time <= 0:
            raise ValueError(f"Request {self.id}: holding time must be positive")

    def vnf(self, vnf_id: str) -> VNF:
        for vnf in self.vnfs:
            if vnf.id == vnf_id:
                return vnf
        raise StructuralError(f"Request {self.id} has no VNF {vnf_id}")

    def vlink(self, commodity: Commodity) -> VirtualLink:
        for vlink in self.vlinks:
            if vlink.commodity == commodity:
                return vlink
        raise StructuralError(f"Request {self.id} has no virtual link {commodity}")

    @property
    def commodities(self) -> list[Commodity]:
        return [vlink.commodity for vlink in self.vlinks]

    @property
    def total_cpu(self) -> float:
        return math.fsum(vnf.cpu_demand for vnf in self.vnfs)

    @property
    def total_bw(self) -> float:
        return math.fsum(vlink.bw_demand for vlink in self.vlinks)


@dataclass(frozen=True, slots=True)
class AugmentedPath:
    """
    Candidate routing of one commodity: augmented edge (i, host_src), a simple
    substrate path `nodes` from host_src to host_dst, augmented edge (host_dst, j).
    A single-node `nodes` tuple encodes colocation.
    """
    id: str
    commodity: Commodity
    nodes: tuple[str, ...]
    cost: float
    trust: TrustValue = FULL_TRUST

    @property
    def host_src(self) -> str:
        return self.nodes[0]

    @property
    def host_dst(self) -> str:
        return self.nodes[-1]

    @property
    def substrate_edges(self) -> tuple[tuple[str, str], ...]:
        return tuple(zip(self.nodes, self.nodes[1:]))

    @property
    def edge_keys(self) -> tuple[LinkKey, ...]:
        return tuple(link_key(a, b) for a, b in self.substrate_edges)

    @property
    def hops(self) -> int:
        return len(self.nodes) - 1

    @property
    def is_colocation(self) -> bool:
        return len(self.nodes) == 1


@dataclass(frozen=True, slots=True)
class AugmentedGraph:
    """Substrate plus the augmented edges (i, u) and (u, j) of one commodity."""
    base: SubstrateNetwork
    commodity: Commodity
    source_hosts: tuple[str, ...]
    sink_hosts: tuple[str, ...]

    @property
    def source_edges(self) -> tuple[tuple[str, str], ...]:
        return tuple((self.commodity[0], u) for u in self.source_hosts)

    @property
    def sink_edges(self) -> tuple[tuple[str, str], ...]:
        return tuple((u, self.commodity[1]) for u in self.sink_hosts)


@dataclass(frozen=True, slots=True)
class EmbeddingSolution:
    assignment: Mapping[str, str]
    flows: Mapping[str, float]
    paths: Mapping[str, AugmentedPath]
    objective_value: float = 0.0
    bw_cost: float = 0.0
    bw_revenue: float = 0.0
    cpu_cost: float = 0.0
    cpu_revenue: float = 0.0


@dataclass(frozen=True, slots=True)
class Violation:
    family: ConstraintFamily
    constraint_id: str
    slack: float
    detail: str = ""


@dataclass(frozen=True, slots=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def is_valid(self) -> bool:
        return not self.violations

    def families(self) -> set[ConstraintFamily]:
        return {violation.family for violation in self.violations}

    def of_family(self, family: ConstraintFamily) -> list[Violation]:
        return [v for v in self.violations if v.family is family]


# --- solver results ---

class SolveStatus(StrEnum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    TIMEOUT = "timeout"
    ERROR = "error"


@dataclass(frozen=True, slots=True)
class SolveBudget:
    time_limit: float = 10.0
    node_limit: int = 100_000


@dataclass(frozen=True, slots=True)
class SolveStats:
    nodes_explored: int = 0
    lp_iterations: int = 0
    wall_time: float = 0.0


@dataclass(frozen=True, slots=True)
class SolveResult:
    """`solution` is set only when optimal; `incumbent` carries the best embedding found before a timeout."""

    status: SolveStatus
    objective: float = math.inf
    solution: EmbeddingSolution | None = None
    stats: SolveStats = SolveStats()
    gap: float | None = None
    binding_family: ConstraintFamily | None = None
    message: str = ""
    incumbent: EmbeddingSolution | None = None

    @property
    def is_optimal(self) -> bool:
        return self.status is SolveStatus.OPTIMAL
