import itertools
import logging
import math

import pytest

from trust_aware_sfc.application.formulation import build_link_based_model, build_pb_model
from trust_aware_sfc.application.pathspace import build_path_universe
from trust_aware_sfc.application.simulator import Method, embed_with_method
from trust_aware_sfc.application.validation import validate_solution
from trust_aware_sfc.application.workload import (
    ExperimentConfig,
    WorkloadStreams,
    generate_fat_tree_zone,
    generate_request_stream,
)
from trust_aware_sfc.domain.models import (
    ConstraintFamily,
    SolveBudget,
    SolveStatus,
    SubstrateNetwork,
    Variant,
)
from trust_aware_sfc.infrastructure.branch_and_bound import SimplexBranchAndBoundSolver
from tests.helpers import line_network, link, random_instance, request, server, switch, vlink, vnf


def pb_model(net, req, k=None, variant=Variant.PB_SCE, **kwargs):
    universe = build_path_universe(net, req, k, variant.node_trust, None)
    return build_pb_model(net, req, universe, variant, **kwargs)


def test_single_vnf_goes_to_cheapest_host(solver):
    # The placement term is gamma * host trust, so the least-trusted server is cheapest
    net = line_network(s1_trust=0.9, s2_trust=0.4)
    req = request([vnf("a", 1.0)], [])
    result = solver.solve_milp(pb_model(net, req))
    assert result.status is SolveStatus.OPTIMAL
    assert result.solution.assignment == {"a": "s2"}
    assert result.objective == pytest.approx(0.4)


def test_colocation_beats_transport(solver):
    net = line_network(s1_trust=0.5, s2_trust=0.5)
    req = request([vnf("a", 1.0), vnf("b", 1.0)], [vlink("a", "b", 10.0)])
    result = solver.solve_milp(pb_model(net, req))
    assert result.is_optimal
    assert result.solution.assignment["a"] == result.solution.assignment["b"]
    assert result.objective == pytest.approx(1.0)
    assert result.solution.bw_cost == 0.0


def test_cpu_forces_split_placement(solver):
    net = line_network(cpu=1.5)
    req = request([vnf("a", 1.0), vnf("b", 1.0)], [vlink("a", "b", 10.0)])
    result = solver.solve_milp(pb_model(net, req))
    assert result.is_optimal
    assert result.solution.assignment["a"] != result.solution.assignment["b"]
    # 10 Mbps over two hops plus two fully trusted hosts
    assert result.objective == pytest.approx(22.0)
    assert validate_solution(net, req, result.solution).is_valid


def test_bandwidth_split_over_two_paths(solver):
    net = SubstrateNetwork.build(
        [server("s1", 1.5), server("s2", 1.5), switch("w1"), switch("w2")],
        [link("s1", "w1", 6.0), link("w1", "s2", 6.0), link("s1", "w2", 6.0), link("w2", "s2", 6.0)],
    )
    req = request([vnf("a", 1.0), vnf("b", 1.0)], [vlink("a", "b", 10.0)])
    result = solver.solve_milp(pb_model(net, req))
    assert result.is_optimal
    assert len(result.solution.flows) == 2
    assert sum(result.solution.flows.values()) == pytest.approx(10.0)
    assert validate_solution(net, req, result.solution).is_valid


def test_trivially_infeasible_model_names_the_family(solver):
    net = line_network(s1_trust=0.3, s2_trust=0.3)
    req = request([vnf("a", 1.0, trust=0.9)], [])
    result = solver.solve_milp(pb_model(net, req, variant=Variant.PB_NODE_TRUST))
    assert result.status is SolveStatus.INFEASIBLE
    assert result.binding_family is ConstraintFamily.NODE_TRUST
    assert result.solution is None


def test_capacity_infeasibility_found_by_search(solver):
    # Each VNF fits alone but the link cannot carry the demand and the servers cannot share
    net = line_network(capacity=5.0, cpu=1.5)
    req = request([vnf("a", 1.0), vnf("b", 1.0)], [vlink("a", "b", 10.0)])
    result = solver.solve_milp(pb_model(net, req))
    assert result.status is SolveStatus.INFEASIBLE


def test_link_based_matches_exact_path_based(solver, mesh):
    req = request([vnf("a", 4.0), vnf("b", 4.0), vnf("c", 4.0)], [vlink("a", "b", 20.0), vlink("b", "c", 30.0)])
    exact = solver.solve_milp(pb_model(mesh, req, k=None))
    link_based = solver.solve_milp(build_link_based_model(mesh, req))
    assert exact.is_optimal and link_based.is_optimal
    assert link_based.objective == pytest.approx(exact.objective)
    assert validate_solution(mesh, req, link_based.solution).is_valid


def test_objective_monotone_in_k(solver, mesh):
    req = request([vnf("a", 6.0), vnf("b", 6.0)], [vlink("a", "b", 30.0)])
    objectives = []
    for k in (1, 2, 4, 8, None):
        result = solver.solve_milp(pb_model(mesh, req, k=k))
        objectives.append(result.objective)
    for smaller, larger in itertools.pairwise(objectives):
        assert larger <= smaller + 1e-9


def test_node_limit_yields_timeout_or_optimum(mesh):
    solver = SimplexBranchAndBoundSolver(SolveBudget(time_limit=60.0, node_limit=1))
    req = request([vnf("a", 6.0), vnf("b", 6.0), vnf("c", 6.0)], [vlink("a", "b", 30.0), vlink("b", "c", 30.0)])
    result = solver.solve_milp(pb_model(mesh, req))
    assert result.status in (SolveStatus.OPTIMAL, SolveStatus.TIMEOUT)
    if result.status is SolveStatus.TIMEOUT:
        assert result.solution is None
        assert (result.incumbent is not None) == math.isfinite(result.objective)


def test_clock_budget_is_respected(mesh):
    ticks = itertools.count(step=100.0)
    solver = SimplexBranchAndBoundSolver(SolveBudget(time_limit=1.0), clock=lambda: next(ticks))
    req = request([vnf("a", 6.0), vnf("b", 6.0), vnf("c", 6.0)], [vlink("a", "b", 30.0), vlink("b", "c", 30.0)])
    result = solver.solve_milp(pb_model(mesh, req))
    assert result.status in (SolveStatus.OPTIMAL, SolveStatus.TIMEOUT)
    assert result.stats.nodes_explored >= 1


def test_lp_relaxation_bounds_the_milp(solver, mesh):
    req = request([vnf("a", 6.0), vnf("b", 6.0)], [vlink("a", "b", 30.0)])
    model = pb_model(mesh, req)
    relaxation = solver.solve_lp(model)
    milp = solver.solve_milp(model)
    assert relaxation.is_optimal and milp.is_optimal
    assert relaxation.objective <= milp.objective + 1e-9


def test_trace_logs_every_node(mesh, caplog):
    solver = SimplexBranchAndBoundSolver(SolveBudget(time_limit=60.0), trace=True)
    req = request([vnf("a", 6.0), vnf("b", 6.0)], [vlink("a", "b", 30.0)])
    with caplog.at_level(logging.DEBUG, logger="trust_aware_sfc.infrastructure.branch_and_bound"):
        result = solver.solve_milp(pb_model(mesh, req))
    traces = [r for r in caplog.records if r.getMessage().startswith("bb node=")]
    # Nodes whose relaxation is infeasible are counted but not traced
    assert 1 <= len(traces) <= result.stats.nodes_explored


@pytest.mark.parametrize("seed", range(10))
def test_warm_started_nodes_match_cold_solves(seed):
    net, req = random_instance(seed, vnf_count=4)
    budget = SolveBudget(time_limit=120.0)
    warm = SimplexBranchAndBoundSolver(budget)
    cold = SimplexBranchAndBoundSolver(budget, warm_start=False)
    for model in (pb_model(net, req, k=4), build_link_based_model(net, req)):
        expected = cold.solve_milp(model)
        result = warm.solve_milp(model)
        assert result.status is expected.status
        if expected.is_optimal:
            assert result.objective == pytest.approx(expected.objective, abs=1e-6)
            assert validate_solution(net, req, result.solution).is_valid


def test_timeout_keeps_the_incumbent_embedding(mesh):
    req = request([vnf("a", 6.0), vnf("b", 6.0), vnf("c", 6.0)], [vlink("a", "b", 30.0), vlink("b", "c", 30.0)])
    model = build_link_based_model(mesh, req)
    full = SimplexBranchAndBoundSolver(SolveBudget(time_limit=60.0)).solve_milp(model)
    assert full.is_optimal

    # Every node budget short of a proof either has no incumbent yet or reports it as an embedding
    timeouts = 0
    for node_limit in range(1, full.stats.nodes_explored + 1):
        result = SimplexBranchAndBoundSolver(SolveBudget(time_limit=60.0, node_limit=node_limit)).solve_milp(model)
        if result.status is not SolveStatus.TIMEOUT:
            continue
        timeouts += 1
        assert result.solution is None
        if result.incumbent is None:
            assert math.isinf(result.objective)
            continue
        assert result.incumbent.objective_value == pytest.approx(result.objective, rel=1e-6, abs=1e-6)
        assert result.objective >= full.objective - 1e-6
        assert validate_solution(mesh, req, result.incumbent).is_valid
    if full.stats.nodes_explored > 1:
        assert timeouts >= 1


@pytest.mark.slow
@pytest.mark.parametrize("index", range(3))
def test_link_based_fits_the_default_time_limit(index):
    # Default 16-server zone and request stream
    cfg = ExperimentConfig(request_count=3)
    streams = WorkloadStreams.from_seed(cfg.seed)
    zone = generate_fat_tree_zone(cfg, streams.topology)
    req = generate_request_stream(cfg, streams)[index]
    solver = SimplexBranchAndBoundSolver(SolveBudget(time_limit=cfg.solver_time_limit))
    result = embed_with_method(zone, req, Method.link_based(), cfg, solver, None)
    assert result.status in (SolveStatus.OPTIMAL, SolveStatus.INFEASIBLE)
