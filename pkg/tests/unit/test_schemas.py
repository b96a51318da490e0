import pytest
from pydantic import ValidationError

from trust_aware_sfc.application.services import EmbedOptions, EmbeddingService
from trust_aware_sfc.domain.models import Allocation, NodeKind, SolveStatus, Variant
from trust_aware_sfc.presentation.schemas import (
    INPUT_SCHEMAS,
    EmbedOptionsSchema,
    EmbedResponseSchema,
    PathTrustTableSchema,
    ServiceRequestSchema,
    SubstrateSchema,
    resolve_path_trust,
)
from tests.helpers import line_network, request, vlink, vnf

SUBSTRATE = {
    "nodes": [
        {"id": "s1", "total_cpu": 16, "residual_cpu": 8, "trust": 0.9},
        {"id": "sw", "kind": "switch"},
        {"id": "s2", "total_cpu": 16, "trust": 0.4},
    ],
    "links": [
        {"u": "s1", "v": "sw", "capacity": 8000},
        {"u": "sw", "v": "s2", "capacity": 8000, "residual_bw": 6000, "trust": 0.7},
    ],
}

REQUEST = {
    "id": "req-1",
    "vnfs": [
        {"id": "fw", "cpu_demand": 1.6, "trust_req": 0.5, "function_type": "FW"},
        {"id": "ids", "cpu_demand": 3.2, "function_type": "IDS"},
    ],
    "vlinks": [{"src": "fw", "dst": "ids", "bw_demand": 80}],
}


def test_substrate_defaults():
    net = SubstrateSchema.model_validate(SUBSTRATE).to_domain()
    assert net.node("s1").residual_cpu == 8.0
    assert net.node("s2").residual_cpu == 16.0
    assert net.node("sw").kind is NodeKind.SWITCH
    assert net.link("s1", "sw").residual_bw == 8000.0
    assert net.link("s1", "sw").trust.value == 1.0


def test_substrate_document_carries_effective_residuals():
    net = SubstrateSchema.model_validate(SUBSTRATE).to_domain()
    held = net.with_allocations({"r": Allocation(cpu={"s2": 6.0}, bw={("s2", "sw"): 1000.0})})
    document = SubstrateSchema.from_domain(held)
    nodes = {n.id: n for n in document.nodes}
    links = {tuple(sorted((l.u, l.v))): l for l in document.links}
    assert nodes["s2"].residual_cpu == 10.0
    assert links[("s2", "sw")].residual_bw == 5000.0
    assert document.to_domain().residual_snapshot() == held.residual_snapshot()


@pytest.mark.parametrize("patch", [
    {"nodes": [{"id": "sw", "kind": "switch", "total_cpu": 4}]},
    {"nodes": [{"id": "s1", "total_cpu": 4, "residual_cpu": 5}]},
    {"nodes": [{"id": "s1", "total_cpu": 4, "trust": 1.2}]},
    {"links": [{"u": "s1", "v": "s1", "capacity": 10}]},
    {"schema_version": "2.0"},
])
def test_substrate_rejects_invalid_documents(patch):
    with pytest.raises(ValidationError):
        SubstrateSchema.model_validate({**SUBSTRATE, **patch})


def test_request_round_trip():
    schema = ServiceRequestSchema.model_validate(REQUEST)
    req = schema.to_domain()
    assert req.vnf("ids").trust_req.value == 0.0
    assert req.vlinks[0].commodity == ("fw", "ids")
    assert ServiceRequestSchema.from_domain(req).to_domain() == req


def test_request_rejects_invalid_documents():
    # No VNFs, duplicate ids and a vlink that loops back on itself
    with pytest.raises(ValidationError):
        ServiceRequestSchema.model_validate({**REQUEST, "vnfs": []})
    with pytest.raises(ValidationError):
        ServiceRequestSchema.model_validate({**REQUEST, "vnfs": [REQUEST["vnfs"][0]] * 2})
    with pytest.raises(ValidationError):
        ServiceRequestSchema.model_validate({**REQUEST, "vlinks": [{"src": "fw", "dst": "fw", "bw_demand": 1}]})


def test_options_map_to_domain():
    assert EmbedOptionsSchema().to_domain() == EmbedOptions()
    assert EmbedOptionsSchema(k=None, variant="PB_TASCE").to_domain().variant is Variant.PB_TASCE
    with pytest.raises(ValidationError):
        EmbedOptionsSchema(k=0)
    with pytest.raises(ValueError):
        EmbedOptionsSchema(link_based=True, variant="PB_TASCE").to_domain()


def test_resolve_path_trust():
    document = PathTrustTableSchema(entries={"s1|sw;s2|sw": 0.75})
    closed = resolve_path_trust(document, None)
    assert closed.is_closed and closed.to_dict() == {"s1|sw;s2|sw": 0.75}
    mixed = resolve_path_trust(document, 3)
    assert not mixed.is_closed and "s1|sw;s2|sw" in mixed
    assert resolve_path_trust(None, 3).seed == 3
    assert resolve_path_trust(None, None) is None


def test_response_of_infeasible_outcome(solver):
    net = line_network(s1_trust=0.3, s2_trust=0.3)
    req = request([vnf("a", 1.0, trust=0.9)], [])
    outcome = EmbeddingService(solver).embed(net, req, EmbedOptions(variant=Variant.PB_NODE_TRUST))
    response = EmbedResponseSchema.from_outcome(req.id, outcome)
    assert response.status is SolveStatus.INFEASIBLE
    assert response.objective is None
    assert response.accounting is None
    assert response.binding_family == "node_trust"
    assert response.oracle_agrees is None


def test_response_of_optimal_outcome(solver):
    net = line_network(cpu=1.5)
    req = request([vnf("a", 1.0), vnf("b", 1.0)], [vlink("a", "b", 10.0)])
    outcome = EmbeddingService(solver).embed(net, req, EmbedOptions())
    response = EmbedResponseSchema.from_outcome(req.id, outcome)
    assert response.objective == pytest.approx(22.0)
    assert response.accounting.bw_cost == pytest.approx(20.0)
    assert [f.path.nodes for f in response.flows] in ([["s1", "sw", "s2"]], [["s2", "sw", "s1"]])
    assert response.violations == []


@pytest.mark.parametrize("name", sorted(INPUT_SCHEMAS))
def test_every_document_has_a_json_schema(name):
    schema = INPUT_SCHEMAS[name].model_json_schema()
    assert schema["type"] == "object"
