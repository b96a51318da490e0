import math
from typing import Annotated, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from trust_aware_sfc.application.pathspace import PathTrustTable
from trust_aware_sfc.application.services import EmbeddingOutcome, EmbedOptions
from trust_aware_sfc.application.workload import ExperimentConfig
from trust_aware_sfc.domain.models import (
    AugmentedPath,
    ConstraintFamily,
    FunctionType,
    NodeKind,
    PathTrustPolicy,
    ServiceRequest,
    SolveStatus,
    SubstrateLink,
    SubstrateNetwork,
    SubstrateNode,
    TrustValue,
    VNF,
    Variant,
    VirtualLink,
)

SCHEMA_VERSION = "1.0"

Trust = Annotated[float, Field(ge=0.0, le=1.0)]


# === SUBSTRATE SCHEMAS ===
class SubstrateNodeSchema(BaseModel):
    """Substrate node; residual CPU defaults to the total."""
    id: str = Field(..., min_length=1)
    kind: NodeKind = NodeKind.SERVER
    total_cpu: float = Field(0.0, ge=0, description="GHz·cores")
    residual_cpu: Optional[float] = Field(None, ge=0, description="GHz·cores")
    trust: Trust = 1.0

    @model_validator(mode="after")
    def validate_residual(self):
        if self.residual_cpu is not None and self.residual_cpu > self.total_cpu:
            raise ValueError("residual_cpu cannot exceed total_cpu")
        if self.kind is NodeKind.SWITCH and self.total_cpu != 0:
            raise ValueError("switches carry no compute")
        return self


class SubstrateLinkSchema(BaseModel):
    """Undirected substrate link; residual bandwidth defaults to the capacity."""
    u: str = Field(..., min_length=1)
    v: str = Field(..., min_length=1)
    capacity: float = Field(..., ge=0, description="Mbps")
    residual_bw: Optional[float] = Field(None, ge=0, description="Mbps")
    trust: Trust = 1.0

    @model_validator(mode="after")
    def validate_link(self):
        if self.u == self.v:
            raise ValueError("self-loops are not allowed")
        if self.residual_bw is not None and self.residual_bw > self.capacity:
            raise ValueError("residual_bw cannot exceed capacity")
        return self


class SubstrateSchema(BaseModel):
    """Substrate network document."""
    model_config = ConfigDict(json_schema_extra={
        "example": {
            "schema_version": SCHEMA_VERSION,
            "nodes": [
                {"id": "s1", "kind": "server", "total_cpu": 16, "residual_cpu": 8, "trust": 0.9},
                {"id": "sw", "kind": "switch"},
                {"id": "s2", "kind": "server", "total_cpu": 16, "trust": 0.4},
            ],
            "links": [
                {"u": "s1", "v": "sw", "capacity": 8000, "trust": 0.8},
                {"u": "sw", "v": "s2", "capacity": 8000, "residual_bw": 6000, "trust": 0.7},
            ],
        }
    })

    schema_version: Literal["1.0"] = SCHEMA_VERSION
    nodes: list[SubstrateNodeSchema]
    links: list[SubstrateLinkSchema] = []

    def to_domain(self) -> SubstrateNetwork:
        nodes = [
            SubstrateNode(
                id=n.id,
                kind=n.kind,
                total_cpu=n.total_cpu,
                residual_cpu=n.total_cpu if n.residual_cpu is None else n.residual_cpu,
                trust=TrustValue(n.trust),
            )
            for n in self.nodes
        ]
        links = [
            SubstrateLink(
                u=l.u,
                v=l.v,
                capacity=l.capacity,
                residual_bw=l.capacity if l.residual_bw is None else l.residual_bw,
                trust=TrustValue(l.trust),
            )
            for l in self.links
        ]
        return SubstrateNetwork.build(nodes, links)

    @classmethod
    def from_domain(cls, net: SubstrateNetwork) -> "SubstrateSchema":
        """Document of the network's effective residuals."""
        return cls(
            nodes=[
                SubstrateNodeSchema(
                    id=node.id,
                    kind=node.kind,
                    total_cpu=node.total_cpu,
                    residual_cpu=net.residual_cpu(node.id),
                    trust=node.trust.value,
                )
                for node in net.nodes.values()
            ],
            links=[
                SubstrateLinkSchema(
                    u=link.u,
                    v=link.v,
                    capacity=link.capacity,
                    residual_bw=net.residual_bw(key),
                    trust=link.trust.value,
                )
                for key, link in net.links.items()
            ],
        )


# === REQUEST SCHEMAS ===
class VNFSchema(BaseModel):
    id: str = Field(..., min_length=1)
    cpu_demand: float = Field(..., ge=0, description="GHz·cores")
    trust_req: Trust = 0.0
    function_type: FunctionType = FunctionType.FW


class VirtualLinkSchema(BaseModel):
    src: str = Field(..., min_length=1)
    dst: str = Field(..., min_length=1)
    bw_demand: float = Field(..., ge=0, description="Mbps")
    trust_req: Trust = 0.0

    @model_validator(mode="after")
    def validate_endpoints(self):
        if self.src == self.dst:
            raise ValueError("a virtual link needs two distinct endpoints")
        return self


class ServiceRequestSchema(BaseModel):
    """SFC request document."""
    model_config = ConfigDict(json_schema_extra={
        "example": {
            "schema_version": SCHEMA_VERSION,
            "id": "req-1",
            "vnfs": [
                {"id": "fw", "cpu_demand": 1.6, "trust_req": 0.5, "function_type": "FW"},
                {"id": "ids", "cpu_demand": 3.2, "trust_req": 0.3, "function_type": "IDS"},
            ],
            "vlinks": [{"src": "fw", "dst": "ids", "bw_demand": 80, "trust_req": 0.6}],
        }
    })

    schema_version: Literal["1.0"] = SCHEMA_VERSION
    id: str = Field(..., min_length=1)
    vnfs: list[VNFSchema] = Field(..., min_length=1)
    vlinks: list[VirtualLinkSchema] = []
    arrival_time: float = 0.0
    holding_time: float = Field(1.0, gt=0)

    @field_validator("vnfs")
    @classmethod
    def validate_unique_ids(cls, v):
        ids = [vnf.id for vnf in v]
        if len(set(ids)) != len(ids):
            raise ValueError("VNF ids must be unique")
        return v

    def to_domain(self) -> ServiceRequest:
        return ServiceRequest(
            id=self.id,
            vnfs=tuple(
                VNF(v.id, v.cpu_demand, TrustValue(v.trust_req), v.function_type) for v in self.vnfs
            ),
            vlinks=tuple(
                VirtualLink(l.src, l.dst, l.bw_demand, TrustValue(l.trust_req)) for l in self.vlinks
            ),
            arrival_time=self.arrival_time,
            holding_time=self.holding_time,
        )

    @classmethod
    def from_domain(cls, req: ServiceRequest) -> "ServiceRequestSchema":
        return cls(
            id=req.id,
            vnfs=[
                VNFSchema(id=v.id, cpu_demand=v.cpu_demand, trust_req=v.trust_req.value, function_type=v.function_type)
                for v in req.vnfs
            ],
            vlinks=[
                VirtualLinkSchema(src=l.src, dst=l.dst, bw_demand=l.bw_demand, trust_req=l.trust_req.value)
                for l in req.vlinks
            ],
            arrival_time=req.arrival_time,
            holding_time=req.holding_time,
        )


# === PATH TRUST SCHEMA ===
class PathTrustTableSchema(BaseModel):
    """Assigned path trust keyed by the path's sorted undirected edges, e.g. "a|b;b|c"."""
    model_config = ConfigDict(json_schema_extra={
        "example": {"schema_version": SCHEMA_VERSION, "entries": {"s1|sw;s2|sw": 0.75}}
    })

    schema_version: Literal["1.0"] = SCHEMA_VERSION
    entries: dict[str, Trust]

    def to_domain(self) -> PathTrustTable:
        return PathTrustTable(entries=self.entries)

    @classmethod
    def from_domain(cls, table: PathTrustTable) -> "PathTrustTableSchema":
        return cls(entries=table.to_dict())


# === EMBEDDING SCHEMAS ===
class EmbedOptionsSchema(BaseModel):
    k: Optional[int] = Field(12, ge=1, description="Paths per commodity; null for every path")
    variant: Variant = Variant.PB_SCE
    gamma: float = Field(1.0, ge=0)
    trust_policy: PathTrustPolicy = PathTrustPolicy.MIN_LINK
    link_based: bool = False
    couple_destination: bool = True
    big_m_scale: float = Field(1.0, ge=1.0)

    def to_domain(self) -> EmbedOptions:
        return EmbedOptions(**self.model_dump())


class EmbedRequestSchema(BaseModel):
    """Body of POST /embed."""
    substrate: SubstrateSchema
    request: ServiceRequestSchema
    options: EmbedOptionsSchema = EmbedOptionsSchema()
    path_trust: Optional[PathTrustTableSchema] = None
    path_trust_seed: Optional[int] = Field(None, ge=0, description="Draw missing path trust from this seed")
    time_limit: Optional[float] = Field(None, gt=0)
    oracle: bool = False


class PathSchema(BaseModel):
    id: str
    commodity: tuple[str, str]
    nodes: list[str]
    hops: int
    cost: float
    trust: float

    @classmethod
    def from_domain(cls, path: AugmentedPath) -> "PathSchema":
        return cls(
            id=path.id,
            commodity=path.commodity,
            nodes=list(path.nodes),
            hops=path.hops,
            cost=path.cost,
            trust=path.trust.value,
        )


class FlowSchema(BaseModel):
    path: PathSchema
    flow: float


class AccountingSchema(BaseModel):
    objective: float
    bw_cost: float
    bw_revenue: float
    cpu_cost: float
    cpu_revenue: float


class SolveStatsSchema(BaseModel):
    nodes_explored: int
    lp_iterations: int
    wall_time: float


class EmbedResponseSchema(BaseModel):
    """Solution document printed by `embed` and returned by POST /embed."""
    schema_version: Literal["1.0"] = SCHEMA_VERSION
    request_id: str
    status: SolveStatus
    objective: Optional[float] = None
    gap: Optional[float] = None
    binding_family: Optional[ConstraintFamily] = None
    message: str = ""
    assignment: dict[str, str] = {}
    flows: list[FlowSchema] = []
    incumbent_assignment: dict[str, str] = {}
    accounting: Optional[AccountingSchema] = None
    stats: SolveStatsSchema
    violations: list[str] = []
    oracle_status: Optional[SolveStatus] = None
    oracle_objective: Optional[float] = None
    oracle_agrees: Optional[bool] = None

    @classmethod
    def from_outcome(cls, request_id: str, outcome: EmbeddingOutcome) -> "EmbedResponseSchema":
        result = outcome.result
        solution = result.solution
        finite = lambda value: value if value is not None and math.isfinite(value) else None  # noqa: E731
        response = cls(
            request_id=request_id,
            status=result.status,
            objective=finite(result.objective),
            gap=result.gap,
            binding_family=result.binding_family,
            message=result.message,
            stats=SolveStatsSchema(
                nodes_explored=result.stats.nodes_explored,
                lp_iterations=result.stats.lp_iterations,
                wall_time=result.stats.wall_time,
            ),
        )
        if solution is not None:
            response.assignment = dict(solution.assignment)
            response.flows = [
                FlowSchema(path=PathSchema.from_domain(solution.paths[path_id]), flow=flow)
                for path_id, flow in sorted(solution.flows.items())
            ]
            response.accounting = AccountingSchema(
                objective=solution.objective_value,
                bw_cost=solution.bw_cost,
                bw_revenue=solution.bw_revenue,
                cpu_cost=solution.cpu_cost,
                cpu_revenue=solution.cpu_revenue,
            )
        if result.incumbent is not None:
            response.incumbent_assignment = dict(result.incumbent.assignment)
        if outcome.validation is not None:
            response.violations = [
                f"{v.family.value} {v.constraint_id} slack={v.slack:g} {v.detail}".rstrip()
                for v in outcome.validation.violations
            ]
        if outcome.oracle is not None:
            response.oracle_status = outcome.oracle.status
            response.oracle_objective = finite(outcome.oracle.objective)
            response.oracle_agrees = outcome.oracle_agrees
        return response


class PathsRequestSchema(BaseModel):
    """Body of POST /paths."""
    substrate: SubstrateSchema
    request: ServiceRequestSchema
    commodity: tuple[str, str]
    options: EmbedOptionsSchema = EmbedOptionsSchema()
    path_trust: Optional[PathTrustTableSchema] = None
    path_trust_seed: Optional[int] = Field(None, ge=0)


class PathListingSchema(BaseModel):
    commodity: tuple[str, str]
    k: Optional[int]
    trust_policy: PathTrustPolicy
    paths: list[PathSchema]


# Documents the `schema` command prints.
INPUT_SCHEMAS: dict[str, type[BaseModel]] = {
    "substrate": SubstrateSchema,
    "request": ServiceRequestSchema,
    "path-trust": PathTrustTableSchema,
    "experiment-config": ExperimentConfig,
    "embed-request": EmbedRequestSchema,
    "embed-response": EmbedResponseSchema,
}


def resolve_path_trust(
    table: Optional[PathTrustTableSchema],
    seed: Optional[int],
    bounds: tuple[float, float] = (0.5, 1.0),
) -> Optional[PathTrustTable]:
    """Closed table from a document, a seeded one from a seed, or None."""
    if table is not None:
        entries = table.to_domain()
        if seed is None:
            return entries
        return PathTrustTable(entries=entries.to_dict(), seed=seed, bounds=bounds)
    if seed is not None:
        return PathTrustTable(seed=seed, bounds=bounds)
    return None
