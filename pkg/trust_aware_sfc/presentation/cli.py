"""
Command-line front end.

Commands:
- embed       solve one request on one substrate
- paths       list the candidate paths of one commodity
- experiment  run experiment A, B or a size-sensitivity run and write CSVs
- schema      print the JSON schemas of the input documents

Exit codes of `embed`: 0 accepted, 2 infeasible, 3 timeout, 1 input or
solver error.
"""

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import TextIO

from pydantic import BaseModel, ValidationError

from trust_aware_sfc.application.pathspace import PathTrustTable
from trust_aware_sfc.application.services import EmbedOptions
from trust_aware_sfc.application.workload import ExperimentConfig
from trust_aware_sfc.domain.models import PathTrustPolicy, SolveStatus, Variant
from trust_aware_sfc.presentation.dependencies import DependencyContainer
from trust_aware_sfc.presentation.schemas import (
    INPUT_SCHEMAS,
    EmbedResponseSchema,
    PathListingSchema,
    PathSchema,
    PathTrustTableSchema,
    ServiceRequestSchema,
    SubstrateSchema,
)

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

EXIT_ACCEPTED = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2
EXIT_TIMEOUT = 3

_EXIT_BY_STATUS = {
    SolveStatus.OPTIMAL: EXIT_ACCEPTED,
    SolveStatus.INFEASIBLE: EXIT_INFEASIBLE,
    SolveStatus.TIMEOUT: EXIT_TIMEOUT,
    SolveStatus.ERROR: EXIT_ERROR,
}


def _parse_k(text: str) -> int | None:
    if text.lower() in ("inf", "all"):
        return None
    try:
        k = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer or 'inf', got {text!r}")
    if k < 1:
        raise argparse.ArgumentTypeError(f"k must be at least 1, got {k}")
    return k


def _load(schema: type[BaseModel], path: Path) -> BaseModel:
    return schema.model_validate_json(path.read_text(encoding="utf-8"))


def _add_instance_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("substrate", type=Path, help="Substrate JSON document")
    parser.add_argument("request", type=Path, help="Request JSON document")
    parser.add_argument("--k", type=_parse_k, default=12, help="Paths per commodity, or 'inf' (default 12)")
    parser.add_argument("--variant", type=Variant, choices=list(Variant), default=Variant.PB_SCE)
    parser.add_argument(
        "--trust-policy", type=PathTrustPolicy, choices=list(PathTrustPolicy), default=PathTrustPolicy.MIN_LINK
    )
    parser.add_argument("--path-trust", type=Path, help="Path-trust table JSON (assigned policy)")
    parser.add_argument("--seed", type=int, help="Seed for drawing path trust not found in the table")
    parser.add_argument("--json", action="store_true", help="Print the JSON document instead of a summary")


def _parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        prog="tasfc",
        description="Trust-aware SFC embedding: single-request solves and simulation experiments.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    embed = commands.add_parser("embed", help="Embed one request")
    _add_instance_arguments(embed)
    embed.add_argument("--gamma", type=float, default=1.0, help="Weight of the host-trust term (default 1)")
    embed.add_argument("--oracle", action="store_true", help="Cross-check with the brute-force oracle")
    embed.add_argument("--link-based", action="store_true", help="Use the link-based model")
    embed.add_argument("--no-dst-coupling", action="store_true", help="Only couple flows to the source host")
    embed.add_argument("--big-m-scale", type=float, default=1.0)
    embed.add_argument("--time-limit", type=float, help="Solver time limit in seconds")
    embed.add_argument("--node-limit", type=int, help="Branch-and-bound node limit")
    embed.add_argument("--trace", action="store_true", help="Log every branch-and-bound node")
    embed.add_argument("--dump-lp", type=Path, help="Write the model in LP text form")

    paths = commands.add_parser("paths", help="List candidate paths of one commodity")
    _add_instance_arguments(paths)
    paths.add_argument("--commodity", nargs=2, metavar=("I", "J"), required=True)

    experiment = commands.add_parser("experiment", help="Run a simulation experiment")
    experiment.add_argument("config", type=Path, nargs="?", help="Experiment config JSON (defaults if omitted)")
    experiment.add_argument("--experiment", choices=("A", "B", "size"), default="A")
    experiment.add_argument("--out", type=Path, help="Output directory (default $TASFC_OUTPUT_DIR or results)")
    experiment.add_argument("--seed", type=int)
    experiment.add_argument("--fixed-vnf-count", type=int)
    experiment.add_argument("--profiles", type=Path, help="VNF profile table JSON")
    experiment.add_argument("--workers", type=int)

    schema = commands.add_parser("schema", help="Print input document schemas")
    schema.add_argument("name", nargs="?", choices=sorted(INPUT_SCHEMAS))
    return parser.parse_args(argv)


def _path_trust_table(args: argparse.Namespace) -> PathTrustTable | None:
    if args.path_trust is not None:
        table = _load(PathTrustTableSchema, args.path_trust).to_domain()
        if args.seed is None:
            return table
        return PathTrustTable(entries=table.to_dict(), seed=args.seed)
    if args.trust_policy is PathTrustPolicy.ASSIGNED:
        return PathTrustTable(seed=args.seed if args.seed is not None else 0)
    return None


def _print_embedding(response: EmbedResponseSchema, out: TextIO) -> None:
    status = response.status.value
    if response.binding_family is not None:
        status += f" (binding: {response.binding_family.value})"
    print(f"request {response.request_id}: {status}", file=out)
    if response.message:
        print(f"  {response.message}", file=out)
    if response.assignment:
        print("assignment:", file=out)
        for vnf, host in response.assignment.items():
            print(f"  {vnf} @ {host}", file=out)
    if response.flows:
        print("flows:", file=out)
        for flow in response.flows:
            print(f"  {flow.path.id} = {flow.flow:g} via {' '.join(flow.path.nodes)}", file=out)
    if response.accounting is not None:
        a = response.accounting
        print(f"objective: {a.objective:.6f}", file=out)
        print(f"bandwidth: cost {a.bw_cost:g} revenue {a.bw_revenue:g}", file=out)
        print(f"cpu: cost {a.cpu_cost:g} revenue {a.cpu_revenue:g}", file=out)
    elif response.objective is not None:
        print(f"best objective: {response.objective:.6f} (gap {response.gap})", file=out)
    for vnf, host in response.incumbent_assignment.items():
        print(f"  incumbent {vnf} @ {host}", file=out)
    print(f"search: {response.stats.nodes_explored} nodes, {response.stats.lp_iterations} LP iterations", file=out)
    for violation in response.violations:
        print(f"violation: {violation}", file=out)
    if response.oracle_status is not None:
        verdict = "agrees" if response.oracle_agrees else "DISAGREES"
        objective = "-" if response.oracle_objective is None else f"{response.oracle_objective:.6f}"
        print(f"oracle: {response.oracle_status.value} objective {objective} ({verdict})", file=out)


def _cmd_embed(args: argparse.Namespace, out: TextIO) -> int:
    net = _load(SubstrateSchema, args.substrate).to_domain()
    req_doc = _load(ServiceRequestSchema, args.request)
    options = EmbedOptions(
        k=args.k,
        variant=args.variant,
        gamma=args.gamma,
        trust_policy=args.trust_policy,
        link_based=args.link_based,
        couple_destination=not args.no_dst_coupling,
        big_m_scale=args.big_m_scale,
    )
    container = DependencyContainer(solver_time_limit=args.time_limit, node_limit=args.node_limit, trace=args.trace)
    outcome = container.get_embedding_service().embed(
        net, req_doc.to_domain(), options, _path_trust_table(args), container.budget, with_oracle=args.oracle
    )
    if args.dump_lp is not None:
        args.dump_lp.write_text(outcome.model.dump_lp(), encoding="utf-8")
        logger.info("Wrote model to %s", args.dump_lp)

    response = EmbedResponseSchema.from_outcome(req_doc.id, outcome)
    if args.json:
        print(response.model_dump_json(indent=2), file=out)
    else:
        _print_embedding(response, out)
    if response.violations:
        return EXIT_ERROR
    return _EXIT_BY_STATUS[response.status]


def _cmd_paths(args: argparse.Namespace, out: TextIO) -> int:
    net = _load(SubstrateSchema, args.substrate).to_domain()
    req = _load(ServiceRequestSchema, args.request).to_domain()
    commodity = (args.commodity[0], args.commodity[1])
    options = EmbedOptions(k=args.k, variant=args.variant, trust_policy=args.trust_policy)
    paths = DependencyContainer().get_embedding_service().list_paths(
        net, req, commodity, options, _path_trust_table(args)
    )
    listing = PathListingSchema(
        commodity=commodity,
        k=options.k,
        trust_policy=options.trust_policy,
        paths=[PathSchema.from_domain(path) for path in paths],
    )
    if args.json:
        print(listing.model_dump_json(indent=2), file=out)
        return EXIT_ACCEPTED
    k = "inf" if options.k is None else options.k
    print(f"commodity {commodity[0]}->{commodity[1]}: {len(paths)} paths (k={k}, policy={options.trust_policy.value})", file=out)
    for path in listing.paths:
        hosts = f"{path.nodes[0]}->{path.nodes[-1]}"
        print(
            f"  {path.id}  hosts={hosts}  hops={path.hops}  cost={path.cost:g}  trust={path.trust:.4f}  "
            f"{' '.join(path.nodes)}",
            file=out,
        )
    return EXIT_ACCEPTED


def _cmd_experiment(args: argparse.Namespace, out: TextIO) -> int:
    cfg = ExperimentConfig.from_file(args.config) if args.config is not None else ExperimentConfig()
    if args.profiles is not None:
        cfg = cfg.with_profiles_file(args.profiles)
    overrides = {"seed": args.seed, "workers": args.workers, "fixed_vnf_count": args.fixed_vnf_count}
    cfg = ExperimentConfig.model_validate(
        {**cfg.model_dump(), **{key: value for key, value in overrides.items() if value is not None}}
    )
    output_dir = str(args.out or os.getenv("TASFC_OUTPUT_DIR", "results"))

    container = DependencyContainer(output_dir=output_dir)
    report, manifest = container.get_experiment_service(output_dir).run(cfg, args.experiment, output_dir)

    print(f"experiment {report.name} (seed {cfg.seed}) -> {output_dir}", file=out)
    for row in report.summary_rows():
        print(
            f"  {row['method']:<20} acceptance {row['acceptance_ratio']:.3f}  "
            f"cpu util {row['cpu_utilization']:.3f}  "
            f"bw revenue {row['bw_revenue']:.1f}  cpu revenue {row['cpu_revenue']:.1f}",
            file=out,
        )
    print(f"wrote {len(manifest.artifacts)} artifacts and manifest.json", file=out)
    return EXIT_ACCEPTED


def _cmd_schema(args: argparse.Namespace, out: TextIO) -> int:
    if args.name is not None:
        document = INPUT_SCHEMAS[args.name].model_json_schema()
    else:
        document = {name: model.model_json_schema() for name, model in sorted(INPUT_SCHEMAS.items())}
    print(json.dumps(document, indent=2), file=out)
    return EXIT_ACCEPTED


_COMMANDS = {
    "embed": _cmd_embed,
    "paths": _cmd_paths,
    "experiment": _cmd_experiment,
    "schema": _cmd_schema,
}


def _report_validation_error(error: ValidationError, err: TextIO) -> None:
    print(f"error: invalid document ({error.error_count()} problems)", file=err)
    for problem in error.errors():
        location = ".".join(str(part) for part in problem["loc"]) or "<root>"
        print(f"  {location}: {problem['msg']}", file=err)


def main(argv: list[str] | None = None, out: TextIO | None = None, err: TextIO | None = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    args = _parse_args(argv)
    logging.basicConfig(level=os.getenv("TASFC_LOG_LEVEL", "INFO").upper(), format=LOG_FORMAT)
    if getattr(args, "trace", False):
        logging.getLogger("trust_aware_sfc.infrastructure.branch_and_bound").setLevel(logging.DEBUG)
    try:
        return _COMMANDS[args.command](args, out)
    except ValidationError as e:
        _report_validation_error(e, err)
        return EXIT_ERROR
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=err)
        return EXIT_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
