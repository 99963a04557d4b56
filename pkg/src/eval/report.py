"""
Report export for split evaluations.
Writes line-delimited JSON (header, episodes, diagnostics, aggregate,
footer), a column-aligned text table and an optional per-episode CSV.
Reports carry no timestamps so repeated runs are byte-identical.
"""

import csv
import json
import logging
import os
from io import StringIO
from typing import Dict, Iterable, List, Optional

from src.eval.metrics import (
    DEFAULT_DRIFT_THRESHOLD,
    DIFFICULTIES,
    SDTW_NOTE,
    SPL_PROXY_NOTE,
    FailureKind,
    classify_failure,
)
from src.eval.runner import EvalReport
from src.version import __version__

logger = logging.getLogger(__name__)

TABLE_METRICS = ("ne", "sr", "osr", "ndtw", "sdtw", "spl")
CSV_COLUMNS = ("episode_id", "difficulty", "num_actions", "ne", "sr", "osr", "ndtw", "sdtw", "spl",
               "path_length", "collided", "shortest_is_proxy", "failure")


def footer_notes(report: EvalReport) -> List[str]:
    notes = [SDTW_NOTE]
    if report.aggregate and report.aggregate.get("shortest_proxy_episodes"):
        notes.append(SPL_PROXY_NOTE)
    return notes


class ReportWriter:
    """Formats one EvalReport; `config` is the resolved run configuration to echo."""

    def __init__(self, report: EvalReport, config: Optional[Dict] = None):
        self.report = report
        self.config = config or {}

    def export(self, format_type: str) -> str:
        if format_type.lower() == 'jsonl':
            return self._export_jsonl()
        elif format_type.lower() == 'text':
            return self._export_text()
        elif format_type.lower() == 'csv':
            return self._export_csv()
        raise ValueError(f"Unsupported format: {format_type}")

    def write(self, path: str, format_type: str = 'jsonl'):
        directory = os.path.dirname(os.path.abspath(path))
        os.makedirs(directory, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(self.export(format_type))
        logger.info(f"Wrote {format_type} report to {path}")

    def _records(self) -> Iterable[Dict]:
        yield {"type": "header", "version": __version__, "policy": self.report.policy, "config": self.config}
        for score in self.report.scores:
            yield {"type": "episode", **score.to_dict()}
        for episode_id, message in self.report.diagnostics:
            yield {"type": "diagnostic", "episode_id": episode_id, "message": message}
        if self.report.aggregate is not None:
            yield {"type": "aggregate", **self.report.aggregate}
        yield {"type": "footer", "notes": footer_notes(self.report)}

    def _export_jsonl(self) -> str:
        return "".join(json.dumps(record, ensure_ascii=False) + "\n" for record in self._records())

    def _export_text(self) -> str:
        summary = self.report.aggregate
        lines = [f"policy: {self.report.policy}  version: {__version__}"]
        if summary is None:
            lines.append("no episodes scored")
        else:
            rows = [("Overall", summary)] + [(name, summary["difficulty"][name]) for name in DIFFICULTIES]
            table = [["split", "episodes"] + [m.upper() if m != "ndtw" else "nDTW" for m in TABLE_METRICS]]
            for name, values in rows:
                cells = [name, str(values["episodes"])]
                cells += [f"{values[m]:.2f}" if values["episodes"] else "-" for m in TABLE_METRICS]
                table.append(cells)
            lines.extend(_align(table))

            lines.append("")
            failed = sum(summary["failures"].values())
            failures = [["failure", "count", "share"]]
            for kind in FailureKind:
                count = summary["failures"][kind.value]
                share = f"{100.0 * count / failed:.1f}%" if failed else "-"
                failures.append([kind.value, str(count), share])
            lines.extend(_align(failures))

        if self.report.diagnostics:
            lines.append("")
            lines.extend(f"skipped {episode_id}: {message}" for episode_id, message in self.report.diagnostics)
        lines.append("")
        lines.extend(f"note: {note}" for note in footer_notes(self.report))
        return "\n".join(lines) + "\n"

    def _export_csv(self) -> str:
        output = StringIO()
        writer = csv.writer(output, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for score in self.report.scores:
            record = score.to_dict()
            writer.writerow([record[column] if record[column] is not None else "" for column in CSV_COLUMNS])
        return output.getvalue()


def _align(rows: List[List[str]]) -> List[str]:
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    lines = []
    for row in rows:
        first = row[0].ljust(widths[0])
        rest = [cell.rjust(width) for cell, width in zip(row[1:], widths[1:])]
        lines.append("  ".join([first] + rest))
    return lines


def read_episode_records(path: str) -> List[Dict]:
    """Per-episode records of a JSONL report (or a bare JSONL of score records)."""
    records = []
    with open(path, "r", encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise ValueError(f"{path}:{line_number}: invalid JSON: {e}")
            if isinstance(record, dict) and record.get("type", "episode") == "episode":
                records.append(record)
    return records


def classify_records(records: Iterable[Dict], drift_threshold: float = DEFAULT_DRIFT_THRESHOLD) -> List[Dict]:
    """
    Failure labels for per-episode records.

    Records need `sr`, `osr`, `collided` and `ndtw`; successful episodes
    get a null label and every sr = 0 episode gets exactly one.
    """
    labelled = []
    for record in records:
        missing = [k for k in ("sr", "osr", "ndtw") if k not in record]
        if missing:
            raise ValueError(f"record {record.get('episode_id', '?')} lacks {missing}")
        failure = None
        if not int(record["sr"]):
            failure = classify_failure(int(record["osr"]), bool(record.get("collided", False)),
                                       float(record["ndtw"]), drift_threshold).value
        labelled.append({"episode_id": record.get("episode_id", ""), "failure": failure})
    return labelled


def failure_table(labelled: Iterable[Dict]) -> Dict[str, int]:
    table = {kind.value: 0 for kind in FailureKind}
    for record in labelled:
        if record["failure"] is not None:
            table[record["failure"]] += 1
    return table
