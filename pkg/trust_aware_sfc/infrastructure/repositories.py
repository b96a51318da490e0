# trust_aware_sfc/infrastructure/repositories.py

import csv
import hashlib
import io
import json
import logging
from pathlib import Path
from typing import Iterable

from trust_aware_sfc.application.repositories import IRunRepository
from trust_aware_sfc.application.services import RunManifest
from trust_aware_sfc.application.simulator import (
    WINDOW_METRICS,
    ExperimentReport,
    RequestRecord,
    box_stats,
)

logger = logging.getLogger(__name__)

BOX_METRICS = ("bw_revenue", "bw_cost", "cpu_revenue", "cpu_cost")


def _cell(value: object) -> object:
    if value is None:
        return ""
    if hasattr(value, "value"):
        return value.value
    return value


def record_to_dict(record: RequestRecord) -> dict:
    """JSON-ready form of one admission decision."""
    return {
        "id": record.request_id,
        "arrival_time": record.arrival_time,
        "vnf_count": record.vnf_count,
        "decision": record.decision.value,
        "objective": record.objective,
        "bw_revenue": record.bw_revenue,
        "bw_cost": record.bw_cost,
        "cpu_revenue": record.cpu_revenue,
        "cpu_cost": record.cpu_cost,
        "nodes_explored": record.nodes_explored,
        "lp_iterations": record.lp_iterations,
        "binding_family": record.binding_family.value if record.binding_family else None,
    }


class FileRunRepository(IRunRepository):
    """
    Writes experiment results under one output directory.

    Every artifact is written with '\\n' line endings and deterministic float
    formatting, and its sha256 is returned for the run manifest.
    """

    def __init__(self, output_dir: str | Path):
        self.output_dir = Path(output_dir)

    def _write(self, name: str, text: str) -> str:
        self.output_dir.mkdir(parents=True, exist_ok=True)
        data = text.encode("utf-8")
        (self.output_dir / name).write_bytes(data)
        logger.debug("Wrote %s (%d bytes)", name, len(data))
        return hashlib.sha256(data).hexdigest()

    def _write_csv(self, name: str, header: list[str], rows: Iterable[list[object]]) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(value) for value in row])
        return self._write(name, buffer.getvalue())

    def save_report(self, report: ExperimentReport) -> dict[str, str]:
        artifacts: dict[str, str] = {}
        labels = report.labels

        count = max((len(run.metrics.windows) for run in report.runs), default=0)
        for metric in WINDOW_METRICS:
            rows = []
            for index in range(count):
                windows = [run.metrics.windows[index] if index < len(run.metrics.windows) else None
                           for run in report.runs]
                reference = next(w for w in windows if w is not None)
                rows.append([index, reference.start, reference.end]
                            + [getattr(w, metric) if w else None for w in windows])
            name = f"{metric}.csv"
            artifacts[name] = self._write_csv(name, ["window", "start", "end", *labels], rows)

        summary = report.summary_rows()
        if summary:
            header = list(summary[0])
            artifacts["summary.csv"] = self._write_csv(
                "summary.csv", header, ([row[key] for key in header] for row in summary)
            )

        cdfs = [report.cdf(label) for label in labels]
        artifacts["accepted_size_cdf.csv"] = self._write_csv(
            "accepted_size_cdf.csv",
            ["vnf_count", *labels],
            ([size, *(cdf[position] for cdf in cdfs)] for position, size in enumerate(report.sizes)),
        )

        box_rows = []
        for run in report.runs:
            accepted = [record for record in run.metrics.records if record.accepted]
            for metric in BOX_METRICS:
                box_rows.append([run.metrics.label, metric, *box_stats([getattr(r, metric) for r in accepted])])
        artifacts["per_request_boxplot.csv"] = self._write_csv(
            "per_request_boxplot.csv", ["method", "metric", "min", "q1", "median", "q3", "max"], box_rows
        )

        for run in report.runs:
            name = f"requests-{run.metrics.label}.jsonl"
            text = "".join(json.dumps(record_to_dict(r)) + "\n" for r in run.metrics.records)
            artifacts[name] = self._write(name, text)
        return artifacts

    def save_manifest(self, manifest: RunManifest) -> None:
        self._write("manifest.json", json.dumps(manifest.to_dict(), indent=2) + "\n")
