"""Job grouping (JGS and the DJG baseline), overflow handling and dispatch.

Grouping is FCFS on both axes: jobs are taken in submission order and
resources are visited in registry order, wrapping around until the job
list is exhausted. Each visit packs the longest feasible prefix of the
remaining jobs onto the resource.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

from .model import (
    Cluster,
    GroupedJob,
    Job,
    Mode,
    Resource,
    SchedulingParams,
    check_group_feasible,
    check_totals_feasible,
    exact,
    validate_clusters,
)

GLOBAL = "global"
LOCAL = "local"


@dataclass(frozen=True)
class GroupingOutcome:
    groups: tuple[GroupedJob, ...] = ()
    # JobList1: jobs no resource could take on the last pass
    overflow_jobs: tuple[Job, ...] = ()
    passes: int = 0
    # terminal overflow, returned to the user
    rejected: tuple[str, ...] = ()

    @property
    def overflow(self) -> tuple[str, ...]:
        return tuple(j.job_id for j in self.overflow_jobs)

    def grouped_ids(self) -> list[str]:
        return [jid for g in self.groups for jid in g.members]


@dataclass(frozen=True)
class Assignment:
    group_id: str
    cluster_id: str
    resource_id: str
    decided_by: str = GLOBAL


class DispatchError(Exception):
    pass


def _group_name(n: int) -> str:
    return f"G{n}"


def group_jobs(
    jobs: Sequence[Job],
    resources: Sequence[Resource],
    params: SchedulingParams,
    mode: Mode = Mode.JGS,
    first_group: int = 1,
) -> GroupingOutcome:
    """Group ``jobs`` onto ``resources``.

    A job that fits no resource on its own is moved to overflow once a full
    cycle over the resources makes no progress; grouping then carries on
    with the next job.
    """
    mode = Mode(mode)
    pending = deque(sorted(jobs, key=lambda j: j.submit_seq))
    if not resources:
        return GroupingOutcome(overflow_jobs=tuple(pending))

    groups: list[GroupedJob] = []
    overflow: list[Job] = []
    n = len(resources)
    visits = 0
    idle_visits = 0
    while pending:
        resource = resources[visits % n]
        visits += 1
        batch: list[Job] = []
        mi = Fraction(0)
        mem = Fraction(0)
        while pending:
            nxt = pending[0]
            cand_mi = mi + exact(nxt.length_mi)
            cand_mem = mem + exact(nxt.memory_mb)
            if not check_totals_feasible(cand_mi, cand_mem, resource, params, mode):
                break
            batch.append(pending.popleft())
            mi, mem = cand_mi, cand_mem
        if batch:
            groups.append(
                GroupedJob.from_jobs(
                    _group_name(first_group + len(groups)), resource.resource_id, batch
                )
            )
            idle_visits = 0
        else:
            idle_visits += 1
            if idle_visits == n:
                overflow.append(pending.popleft())
                idle_visits = 0
    passes = -(-visits // n)
    return GroupingOutcome(tuple(groups), tuple(overflow), passes)


def drain_overflow(
    outcome: GroupingOutcome,
    resources: Sequence[Resource],
    params: SchedulingParams,
    mode: Mode = Mode.JGS,
) -> GroupingOutcome:
    """Re-offer JobList1 to ``resources`` once the main list is grouped.

    Jobs that still fit nowhere become terminal rejections.
    """
    if not outcome.overflow_jobs:
        return outcome
    second = group_jobs(
        outcome.overflow_jobs, resources, params, mode, first_group=len(outcome.groups) + 1
    )
    return GroupingOutcome(
        groups=outcome.groups + second.groups,
        overflow_jobs=(),
        passes=outcome.passes + second.passes,
        rejected=outcome.rejected + second.overflow,
    )


def dispatch(groups: Iterable[GroupedJob], clusters: Iterable[Cluster], registry) -> list[Assignment]:
    """Global scheduler: send each group to its grouping resource's cluster.

    Marks each target resource busy in ``registry``.
    """
    clusters = list(clusters)
    try:
        cluster_of = validate_clusters(clusters, registry.resources.keys())
    except ValueError as exc:
        raise DispatchError(str(exc)) from None
    out = []
    for group in groups:
        if group.resource_id not in registry.resources:
            raise DispatchError(f"group {group.group_id}: unknown resource {group.resource_id}")
        cluster_id = cluster_of.get(group.resource_id)
        if cluster_id is None:
            raise DispatchError(f"resource {group.resource_id} belongs to no cluster")
        out.append(Assignment(group.group_id, cluster_id, group.resource_id, GLOBAL))
    for a in out:
        registry.mark_busy(a.resource_id)
    return out


@dataclass
class ClusterState:
    """What the local scheduler sees of one cluster.

    ``resources`` lists the cluster's members in FCFS order;
    ``queue_depth`` counts the groups currently queued on each.
    """

    cluster: Cluster
    resources: Sequence[Resource]
    queue_depth: dict[str, int] = field(default_factory=dict)

    @classmethod
    def from_assignments(
        cls, cluster: Cluster, resources: Sequence[Resource], assignments: Iterable[Assignment]
    ) -> "ClusterState":
        members = [r for r in resources if r.resource_id in cluster.resource_ids]
        depth = {r.resource_id: 0 for r in members}
        for a in assignments:
            if a.resource_id in depth:
                depth[a.resource_id] += 1
        return cls(cluster, members, depth)


def local_refine(
    assignments: Sequence[Assignment],
    cluster_state: ClusterState,
    groups: Mapping[str, GroupedJob],
    params: SchedulingParams,
    mode: Mode = Mode.JGS,
) -> list[Assignment]:
    """Local scheduler: move waiting groups off backlogged resources.

    A group that would wait behind another group on its resource moves to
    the first idle resource (FCFS order) whose MIPS is at least as high and
    on which the group is still feasible. Moves are marked ``local``.
    """
    cid = cluster_state.cluster.cluster_id
    if any(a.cluster_id != cid for a in assignments):
        raise DispatchError(f"local_refine for {cid} received assignments of another cluster")
    by_id = {r.resource_id: r for r in cluster_state.resources}
    depth = dict(cluster_state.queue_depth)
    ahead: dict[str, int] = {}
    out = []
    for a in assignments:
        position = ahead.get(a.resource_id, 0)
        ahead[a.resource_id] = position + 1
        target = None
        if position >= 1 and depth.get(a.resource_id, 0) >= 2:
            target = _idle_target(groups[a.group_id], by_id[a.resource_id], cluster_state, depth, params, mode)
        if target is None:
            out.append(a)
            continue
        depth[a.resource_id] -= 1
        depth[target.resource_id] = depth.get(target.resource_id, 0) + 1
        ahead[target.resource_id] = ahead.get(target.resource_id, 0) + 1
        out.append(replace(a, resource_id=target.resource_id, decided_by=LOCAL))
    return out


def _idle_target(
    group: GroupedJob,
    current: Resource,
    state: ClusterState,
    depth: Mapping[str, int],
    params: SchedulingParams,
    mode: Mode,
) -> Optional[Resource]:
    for candidate in state.resources:
        if candidate.resource_id == current.resource_id or depth.get(candidate.resource_id, 0) != 0:
            continue
        if exact(candidate.mips) < exact(current.mips):
            continue
        if check_group_feasible(group, candidate, params, mode):
            return candidate
    return None


def apply_assignments(
    groups: Sequence[GroupedJob], assignments: Sequence[Assignment]
) -> list[GroupedJob]:
    """Rebind groups to the resources their final assignments name."""
    target = {a.group_id: a.resource_id for a in assignments}
    return [g if target[g.group_id] == g.resource_id else g.moved_to(target[g.group_id]) for g in groups]
