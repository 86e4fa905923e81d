"""Time-model simulator for dispatched groups.

Each group occupies its resource for transfer + compute (+ a fixed
dispatch overhead). Groups on one resource run back to back in
assignment order; different resources run in parallel. Durations are
computed on exact rationals and only converted to float at the end.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .model import GroupedJob, Resource, SchedulingParams, exact
from .scheduler import Assignment


@dataclass(frozen=True)
class GroupTiming:
    transfer_s: float
    compute_s: float
    overhead_s: float
    start_s: float
    finish_s: float

    @property
    def duration_s(self) -> float:
        return self.finish_s - self.start_s


@dataclass
class ScheduleMetrics:
    per_group: dict[str, GroupTiming] = field(default_factory=dict)
    per_resource: dict[str, float] = field(default_factory=dict)
    makespan_s: float = 0.0
    total_processing_s: float = 0.0
    utilization: dict[str, float] = field(default_factory=dict)
    rejected_jobs: list[str] = field(default_factory=list)

    @property
    def mean_utilization(self) -> float:
        if not self.utilization:
            return 0.0
        return sum(self.utilization.values()) / len(self.utilization)


def _compute(group: GroupedJob, resource: Resource) -> Fraction:
    return exact(group.total_mi) / exact(resource.mips)


def _transfer(group: GroupedJob, resource: Resource) -> Fraction:
    return exact(group.total_memory_mb) / exact(resource.bandwidth_mbps)


def compute_time_s(group: GroupedJob, resource: Resource) -> float:
    return float(_compute(group, resource))


def transfer_time_s(group: GroupedJob, resource: Resource) -> float:
    return float(_transfer(group, resource))


def run_schedule(
    assignments: Sequence[Assignment],
    groups: Sequence[GroupedJob] | Mapping[str, GroupedJob],
    resources: Sequence[Resource] | Mapping[str, Resource],
    params: SchedulingParams,
    overhead_s: float = 0.0,
    rejected_jobs: Sequence[str] = (),
) -> ScheduleMetrics:
    """Simulate the assignments and collect timing metrics.

    ``utilization`` covers every resource passed in, so idle resources
    show up with 0.0. ``params`` is accepted for symmetry with the
    grouping stage; the time model itself needs only the resources.
    """
    if not isinstance(groups, Mapping):
        groups = {g.group_id: g for g in groups}
    if not isinstance(resources, Mapping):
        resources = {r.resource_id: r for r in resources}
    overhead = exact(overhead_s)

    clock: dict[str, Fraction] = {rid: Fraction(0) for rid in resources}
    busy: dict[str, Fraction] = {rid: Fraction(0) for rid in resources}
    exact_timings = {}
    total = Fraction(0)
    for a in assignments:
        group = groups[a.group_id]
        resource = resources[a.resource_id]
        transfer = _transfer(group, resource)
        compute = _compute(group, resource)
        duration = transfer + compute + overhead
        start = clock[a.resource_id]
        finish = start + duration
        clock[a.resource_id] = finish
        busy[a.resource_id] += duration
        total += duration
        exact_timings[a.group_id] = (transfer, compute, start, finish)

    makespan = max((t[3] for t in exact_timings.values()), default=Fraction(0))
    metrics = ScheduleMetrics(rejected_jobs=list(rejected_jobs))
    for gid, (transfer, compute, start, finish) in exact_timings.items():
        metrics.per_group[gid] = GroupTiming(
            float(transfer), float(compute), float(overhead), float(start), float(finish)
        )
    metrics.per_resource = {rid: float(b) for rid, b in busy.items()}
    metrics.makespan_s = float(makespan)
    metrics.total_processing_s = float(total)
    metrics.utilization = {
        rid: (float(b / makespan) if makespan else 0.0) for rid, b in busy.items()
    }
    return metrics
