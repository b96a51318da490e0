import math

import pytest

from trust_aware_sfc.application.simulator import (
    Decision,
    EventKind,
    ExperimentReport,
    Method,
    SimEvent,
    box_stats,
    experiment_b_methods,
    run_experiment_A,
    run_experiment_B,
    run_methods,
    run_simulation,
    size_cdf,
    size_sensitivity,
    sup_distance,
)
from trust_aware_sfc.application.workload import Distributions, ExperimentConfig
from trust_aware_sfc.domain.models import SolveBudget, Variant
from trust_aware_sfc.infrastructure.branch_and_bound import SimplexBranchAndBoundSolver


def make_solver(cfg):
    return SimplexBranchAndBoundSolver(SolveBudget(time_limit=cfg.solver_time_limit, node_limit=cfg.node_limit))


def test_method_labels():
    assert Method.kpb(8).label == "8-pb-SCE"
    assert Method.kpb(None, Variant.PB_TASCE).label == "inf-pb-TASCE"
    assert Method.link_based().label == "link-based-SCE"
    assert [m.label for m in experiment_b_methods()] == ["12-pb-SCE", "12-pb-NT-SCE", "12-pb-TASCE"]


def test_departures_sort_before_arrivals():
    events = sorted([
        SimEvent(2.0, EventKind.ARRIVAL, "b"),
        SimEvent(2.0, EventKind.DEPARTURE, "a"),
        SimEvent(1.0, EventKind.ARRIVAL, "c"),
    ])
    assert [e.request_id for e in events] == ["c", "a", "b"]


def test_size_cdf():
    assert size_cdf({5: 1, 7: 3}, [5, 6, 7, 8]) == [0.25, 0.25, 1.0, 1.0]
    assert size_cdf({}, [5, 6]) == [0.0, 0.0]


def test_sup_distance_and_box_stats():
    assert sup_distance([0.1, 0.5, 1.0], [0.2, 0.9, 1.0]) == pytest.approx(0.4)
    assert box_stats([1.0, 2.0, 3.0, 4.0, 5.0]) == (1.0, 2.0, 3.0, 4.0, 5.0)
    assert box_stats([]) == (0.0, 0.0, 0.0, 0.0, 0.0)


def test_simulation_records_every_arrival(small_config):
    run = run_simulation(small_config, Method.kpb(4), make_solver(small_config))
    metrics = run.metrics
    assert metrics.arrivals == small_config.request_count
    assert metrics.accepted >= 1
    # Every admitted request also departs
    assert len(run.events) == metrics.arrivals + metrics.accepted
    assert sum(w.arrivals for w in metrics.windows) == metrics.arrivals
    assert len(metrics.windows) == math.ceil(metrics.horizon / small_config.window)
    assert 0.0 <= metrics.steady_state.cpu_utilization <= 1.0
    assert sum(metrics.accepted_size_histogram.values()) == metrics.accepted
    for record in metrics.records:
        if record.accepted:
            assert record.bw_cost >= 0.0
            assert record.cpu_revenue > 0
        else:
            assert record.decision in (Decision.INFEASIBLE, Decision.TIMEOUT)


def test_simulation_is_deterministic(small_config):
    first = run_simulation(small_config, Method.kpb(4, Variant.PB_TASCE), make_solver(small_config))
    second = run_simulation(small_config, Method.kpb(4, Variant.PB_TASCE), make_solver(small_config))
    assert [r.decision for r in first.metrics.records] == [r.decision for r in second.metrics.records]
    assert [r.objective for r in first.metrics.records] == [r.objective for r in second.metrics.records]


def test_link_based_simulation(small_config):
    run = run_simulation(small_config, Method.link_based(), make_solver(small_config))
    assert run.metrics.label == "link-based-SCE"
    assert run.metrics.arrivals == small_config.request_count


def test_size_sensitivity_rejects_out_of_range(small_config):
    with pytest.raises(ValueError):
        size_sensitivity(small_config, 9, SimplexBranchAndBoundSolver)


def test_report_comparisons(small_config):
    runs = run_methods(small_config, [Method.kpb(1), Method.kpb(4)], SimplexBranchAndBoundSolver)
    report = ExperimentReport("k", tuple(runs), reference="4-pb-SCE", sizes=(2, 3))
    assert report.labels == ["1-pb-SCE", "4-pb-SCE"]
    assert report.cdf_distance("4-pb-SCE") == 0.0
    assert report.cdf("4-pb-SCE")[-1] == pytest.approx(1.0)
    rows = report.summary_rows()
    assert [row["method"] for row in rows] == report.labels
    assert rows[0]["acceptance_delta"] == 0.0
    with pytest.raises(KeyError):
        report.series("missing")


@pytest.mark.slow
def test_experiment_a(small_config):
    report = run_experiment_A(small_config, SimplexBranchAndBoundSolver)
    assert report.labels == ["8-pb-SCE", "10-pb-SCE", "12-pb-SCE", "link-based-SCE"]
    assert report.reference == "link-based-SCE"
    assert report.incremental_revenue_pct("link-based-SCE", "cpu_revenue") in (0.0, None)


@pytest.mark.slow
def test_experiment_b_parallel_matches_sequential(small_config):
    sequential = run_experiment_B(small_config, SimplexBranchAndBoundSolver)
    parallel = run_experiment_B(small_config.model_copy(update={"workers": 3}), SimplexBranchAndBoundSolver)
    assert sequential.labels == ["4-pb-SCE", "4-pb-NT-SCE", "4-pb-TASCE"]
    for left, right in zip(sequential.runs, parallel.runs):
        assert [r.decision for r in left.metrics.records] == [r.decision for r in right.metrics.records]


@pytest.fixture
def uncontended_config() -> ExperimentConfig:
    """Requests leave long before the next one arrives, so each one sees the initial zone."""
    return ExperimentConfig(
        seed=11,
        pods=1,
        distributions=Distributions(vnf_count=(2, 3), initial_util=(0.6, 0.9)),
        request_count=16,
        mean_interarrival=1.0,
        mean_holding=1e-6,
        window=5.0,
        solver_time_limit=120.0,
    )


def accepted_ids(run):
    return {record.request_id for record in run.metrics.records if record.accepted}


def assert_ordered(runs):
    """Each run accepts a superset of the next one's requests, so every aggregate follows."""
    for larger, smaller in zip(runs, runs[1:]):
        assert accepted_ids(smaller) <= accepted_ids(larger)
        big, small = larger.metrics.steady_state, smaller.metrics.steady_state
        assert big.acceptance_ratio >= small.acceptance_ratio
        assert big.bw_revenue >= small.bw_revenue - 1e-9
        assert big.cpu_revenue >= small.cpu_revenue - 1e-9


@pytest.mark.slow
def test_link_based_accepts_what_shorter_path_lists_accept(uncontended_config):
    runs = run_methods(
        uncontended_config, [Method.link_based(), Method.kpb(12), Method.kpb(8)], SimplexBranchAndBoundSolver
    )
    assert all(run.metrics.rejections(Decision.TIMEOUT) == 0 for run in runs)
    assert_ordered(runs)


@pytest.mark.slow
def test_trust_constraints_accept_a_subset(uncontended_config):
    # Every path is listed, so the trusted variants choose among a subset of the same embeddings
    runs = run_methods(uncontended_config, experiment_b_methods(None), SimplexBranchAndBoundSolver)
    assert [run.metrics.label for run in runs] == ["inf-pb-SCE", "inf-pb-NT-SCE", "inf-pb-TASCE"]
    assert all(run.metrics.rejections(Decision.TIMEOUT) == 0 for run in runs)
    assert_ordered(runs)
