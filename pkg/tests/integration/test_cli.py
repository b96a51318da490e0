import csv
import io
import json
import logging

import pytest

from trust_aware_sfc.application.pathspace import build_augmented_graph, enumerate_augmented_paths
from trust_aware_sfc.presentation.cli import EXIT_ACCEPTED, EXIT_ERROR, EXIT_INFEASIBLE, main
from trust_aware_sfc.presentation.schemas import ServiceRequestSchema, SubstrateSchema

SUBSTRATE = {
    "nodes": [
        {"id": "s1", "total_cpu": 16, "trust": 0.9},
        {"id": "s2", "total_cpu": 16, "trust": 0.6},
        {"id": "sw1", "kind": "switch"},
        {"id": "sw2", "kind": "switch"},
    ],
    "links": [
        {"u": "s1", "v": "sw1", "capacity": 1000, "trust": 0.9},
        {"u": "s2", "v": "sw1", "capacity": 1000, "trust": 0.8},
        {"u": "s1", "v": "sw2", "capacity": 1000, "trust": 0.7},
        {"u": "s2", "v": "sw2", "capacity": 1000, "trust": 0.7},
    ],
}

CHAIN = {
    "id": "chain",
    "vnfs": [
        {"id": "fw", "cpu_demand": 2.0, "function_type": "FW"},
        {"id": "ids", "cpu_demand": 4.0, "function_type": "IDS"},
    ],
    "vlinks": [{"src": "fw", "dst": "ids", "bw_demand": 80}],
}

# a only fits on s1 (trust), b only on s2 (CPU); every s1-s2 path is below the vlink's trust
UNTRUSTED_SUBSTRATE = {
    "nodes": [
        {"id": "s1", "total_cpu": 10, "residual_cpu": 5, "trust": 0.9},
        {"id": "sw", "kind": "switch"},
        {"id": "s2", "total_cpu": 10, "trust": 0.5},
    ],
    "links": [
        {"u": "s1", "v": "sw", "capacity": 100, "trust": 0.5},
        {"u": "sw", "v": "s2", "capacity": 100, "trust": 0.5},
    ],
}

UNTRUSTED_CHAIN = {
    "id": "strict",
    "vnfs": [{"id": "a", "cpu_demand": 4, "trust_req": 0.8}, {"id": "b", "cpu_demand": 8}],
    "vlinks": [{"src": "a", "dst": "b", "bw_demand": 10, "trust_req": 0.9}],
}


def write(tmp_path, name, document):
    path = tmp_path / name
    path.write_text(json.dumps(document), encoding="utf-8")
    return str(path)


def run(argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(argv, out=out, err=err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def instance(tmp_path):
    return write(tmp_path, "substrate.json", SUBSTRATE), write(tmp_path, "request.json", CHAIN)


def test_embed_single_vnf(tmp_path):
    # One VNF, no virtual links: placed on one server, exit 0
    substrate = write(tmp_path, "substrate.json", SUBSTRATE)
    single = write(tmp_path, "single.json", {"id": "one", "vnfs": [{"id": "fw", "cpu_demand": 1}]})
    code, out, _ = run(["embed", substrate, single])
    assert code == EXIT_ACCEPTED
    assert "request one: optimal" in out
    assert len([line for line in out.splitlines() if " @ " in line]) == 1


def test_embed_chain_with_oracle(instance):
    code, out, _ = run(["embed", *instance, "--k", "inf", "--oracle"])
    assert code == EXIT_ACCEPTED
    assert "objective:" in out
    assert "(agrees)" in out


def test_embed_json_document(instance):
    code, out, _ = run(["embed", *instance, "--json", "--variant", "PB_TASCE"])
    assert code == EXIT_ACCEPTED
    document = json.loads(out)
    assert document["status"] == "optimal"
    assert set(document["assignment"]) == {"fw", "ids"}
    assert document["violations"] == []


def test_embed_reports_binding_path_trust(tmp_path):
    substrate = write(tmp_path, "substrate.json", UNTRUSTED_SUBSTRATE)
    req = write(tmp_path, "request.json", UNTRUSTED_CHAIN)
    code, out, _ = run(["embed", substrate, req, "--variant", "PB_TASCE", "--k", "inf"])
    assert code == EXIT_INFEASIBLE
    assert "request strict: infeasible (binding: path_trust)" in out

    # Without path trust the same request is accepted
    code, _, _ = run(["embed", substrate, req, "--variant", "PB_NODE_TRUST", "--k", "inf"])
    assert code == EXIT_ACCEPTED


def test_embed_dump_lp(instance, tmp_path):
    target = tmp_path / "model.lp"
    code, _, _ = run(["embed", *instance, "--dump-lp", str(target)])
    assert code == EXIT_ACCEPTED
    assert target.read_text(encoding="utf-8").endswith("End\n")


def test_embed_rejects_link_based_path_trust(instance):
    code, _, err = run(["embed", *instance, "--link-based", "--variant", "PB_TASCE"])
    assert code == EXIT_ERROR
    assert err.startswith("error:")


def test_invalid_document_is_located(tmp_path, instance):
    bad = write(tmp_path, "bad.json", {"id": "bad", "vnfs": [{"id": "fw", "cpu_demand": -1}]})
    code, _, err = run(["embed", instance[0], bad])
    assert code == EXIT_ERROR
    assert "invalid document" in err
    assert "vnfs.0.cpu_demand" in err


def test_missing_file(tmp_path, instance):
    code, _, err = run(["embed", instance[0], str(tmp_path / "nope.json")])
    assert code == EXIT_ERROR
    assert "error:" in err


def test_paths_listing(instance):
    code, out, _ = run(["paths", *instance, "--commodity", "fw", "ids", "--k", "3"])
    assert code == EXIT_ACCEPTED
    lines = out.splitlines()
    assert lines[0] == "commodity fw->ids: 3 paths (k=3, policy=min_link)"
    # Colocation comes first, at zero cost and full trust
    assert "cost=0 " in lines[1] and "trust=1.0000" in lines[1]


def test_paths_unbounded_k_lists_every_path(instance):
    code, out, _ = run(["paths", *instance, "--commodity", "fw", "ids", "--k", "inf", "--json"])
    assert code == EXIT_ACCEPTED
    listing = json.loads(out)
    assert listing["k"] is None

    net = SubstrateSchema.model_validate(SUBSTRATE).to_domain()
    req = ServiceRequestSchema.model_validate(CHAIN).to_domain()
    expected = enumerate_augmented_paths(build_augmented_graph(net, req, ("fw", "ids")))
    assert len(listing["paths"]) == len(expected)


def test_paths_rejects_unknown_commodity(instance):
    code, _, err = run(["paths", *instance, "--commodity", "ids", "fw"])
    assert code == EXIT_ERROR
    assert "error:" in err


def test_schema_command():
    code, out, _ = run(["schema", "substrate"])
    assert code == EXIT_ACCEPTED
    assert "nodes" in json.loads(out)["properties"]
    code, out, _ = run(["schema"])
    assert set(json.loads(out)) >= {"substrate", "request", "experiment-config"}


def test_bad_k_is_a_usage_error(instance):
    with pytest.raises(SystemExit) as exit_info:
        main(["embed", *instance, "--k", "0"], out=io.StringIO(), err=io.StringIO())
    assert exit_info.value.code == 2


@pytest.mark.slow
def test_experiment_command_is_reproducible(tmp_path, caplog):
    config = write(tmp_path, "config.json", {
        "seed": 3,
        "pods": 1,
        "distributions": {"vnf_count": [2, 3]},
        "k": 4,
        "request_count": 12,
        "window": 5.0,
        "solver_time_limit": 120.0,
    })
    outputs = []
    with caplog.at_level(logging.WARNING, logger="trust_aware_sfc"):
        for run_name in ("first", "second"):
            out_dir = tmp_path / run_name
            code, out, _ = run(["experiment", config, "--experiment", "B", "--out", str(out_dir)])
            assert code == EXIT_ACCEPTED
            assert "experiment B (seed 3)" in out
            outputs.append(out_dir)

    first, second = outputs
    manifest = json.loads((first / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["methods"] == ["4-pb-SCE", "4-pb-NT-SCE", "4-pb-TASCE"]
    artifacts = sorted(path.name for path in first.iterdir() if path.suffix in (".csv", ".jsonl"))
    assert "summary.csv" in artifacts
    for name in artifacts:
        assert (first / name).read_bytes() == (second / name).read_bytes(), name

    # Every admitted embedding passed validation: no error decisions, nothing logged as invalid
    for name in artifacts:
        if name.endswith(".jsonl"):
            records = [json.loads(line) for line in (first / name).read_text(encoding="utf-8").splitlines()]
            assert len(records) == 12
            assert all(record["decision"] != "error" for record in records)
    with (first / "summary.csv").open(encoding="utf-8") as handle:
        assert all(row["rejected_error"] == "0" for row in csv.DictReader(handle))
    assert not [r for r in caplog.records if "invalid embedding" in r.getMessage()]


def test_embed_reads_path_trust_through_the_schema(tmp_path, instance):
    table = write(tmp_path, "trust.json", {"schema_version": "1.0", "entries": {"s1|sw1;s2|sw1": 0.75}})
    code, _, _ = run([
        "embed", *instance, "--variant", "PB_TASCE", "--trust-policy", "assigned", "--path-trust", table, "--seed", "1",
    ])
    assert code in (EXIT_ACCEPTED, EXIT_INFEASIBLE)

    # Out-of-range trust and a bare mapping are both rejected with the offending location
    for name, document in (
        ("high.json", {"entries": {"s1|sw1;s2|sw1": 1.5}}),
        ("bare.json", {"s1|sw1;s2|sw1": 0.75}),
    ):
        bad = write(tmp_path, name, document)
        code, _, err = run(
            ["embed", *instance, "--variant", "PB_TASCE", "--trust-policy", "assigned", "--path-trust", bad]
        )
        assert code == EXIT_ERROR
        assert "invalid document" in err
