"""CSV report writers.

Run reports are sectioned: a ``[groups]``, ``[resources]`` and
``[rejected]`` block, each a plain CSV table with its own header row.
Floats are written with ``repr`` so values round-trip exactly.
"""

from __future__ import annotations

import csv
import io
from typing import Iterable, Sequence

from .model import CONDITIONS
from .pipeline import ComparisonRow, RunResult

GROUP_COLUMNS = [
    "group_id", "cluster_id", "resource_id", "decided_by", "members",
    "total_mi", "total_memory_mb", "transfer_s", "compute_s", "overhead_s",
    "start_s", "finish_s",
] + [f"cond_{c}" for c in CONDITIONS]
RESOURCE_COLUMNS = ["resource_id", "cluster_id", "busy_s", "utilization"]
REJECTED_COLUMNS = ["job_id", "user", "reason"]
COMPARE_COLUMNS = [
    "jobs", "srjm_total_s", "djgb_total_s", "srjm_makespan_s",
    "djgb_makespan_s", "srjm_mean_util", "djgb_mean_util",
]


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _writer(buf: io.StringIO):
    return csv.writer(buf, lineterminator="\n")


def run_report(result: RunResult) -> str:
    buf = io.StringIO()
    w = _writer(buf)
    cluster_of = {rid: c.cluster_id for c in result.clusters for rid in c.resource_ids}
    by_group = {a.group_id: a for a in result.assignments}

    buf.write("[groups]\n")
    w.writerow(GROUP_COLUMNS)
    for group in result.groups:
        a = by_group[group.group_id]
        t = result.metrics.per_group[group.group_id]
        flags = result.condition_report(group)
        w.writerow([_fmt(v) for v in (
            group.group_id, a.cluster_id, a.resource_id, a.decided_by, ";".join(group.members),
            float(group.total_mi), float(group.total_memory_mb),
            t.transfer_s, t.compute_s, t.overhead_s, t.start_s, t.finish_s,
        )] + ["ok" if flags[c] else "violated" for c in CONDITIONS])

    buf.write("[resources]\n")
    w.writerow(RESOURCE_COLUMNS)
    for rid, busy in result.metrics.per_resource.items():
        w.writerow([rid, cluster_of.get(rid, ""), _fmt(busy), _fmt(result.metrics.utilization[rid])])

    buf.write("[rejected]\n")
    w.writerow(REJECTED_COLUMNS)
    for r in result.rejected:
        w.writerow([r.job_id, r.user, r.reason])
    return buf.getvalue()


def compare_report(levels: Iterable[Sequence[ComparisonRow]]) -> str:
    """One row per job-count level; each level holds the (srjm, djg) pair."""
    buf = io.StringIO()
    w = _writer(buf)
    w.writerow(COMPARE_COLUMNS)
    for srjm, djg in levels:
        w.writerow([_fmt(v) for v in (
            srjm.jobs, srjm.total_processing_s, djg.total_processing_s,
            srjm.makespan_s, djg.makespan_s, srjm.mean_utilization, djg.mean_utilization,
        )])
    return buf.getvalue()


def read_sections(text: str) -> dict[str, list[dict[str, str]]]:
    """Parse a sectioned run report back into rows keyed by section name."""
    sections: dict[str, list[str]] = {}
    current = None
    for line in text.splitlines():
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1]
            sections[current] = []
        elif current is not None:
            sections[current].append(line)
    return {name: list(csv.DictReader(lines)) for name, lines in sections.items()}
