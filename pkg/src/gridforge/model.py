"""Domain types shared across the toolkit, plus the capacity formulas.

Units throughout: MI (million instructions), MIPS, Mb, Mb/s, seconds.
Capacity comparisons are done on exact rationals (``fractions.Fraction``
built from the stored floats/ints), so a group sitting exactly on a
capacity boundary is never misjudged by rounding.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Union

Number = Union[int, float, Fraction]


class Mode(str, enum.Enum):
    """Grouping rule set.

    JGS checks MI capacity, memory and transfer capacity; DJG is the
    MIPS-only baseline and checks MI capacity alone.
    """

    JGS = "jgs"
    DJG = "djg"


# condition labels, in the order they are checked
COND_MI = "i"
COND_MEMORY = "ii"
COND_TRANSFER = "iii"
CONDITIONS = (COND_MI, COND_MEMORY, COND_TRANSFER)


def exact(x: Number) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


@dataclass(frozen=True)
class Job:
    job_id: str
    user_id: str
    length_mi: Number
    memory_mb: Number
    submit_seq: int

    def __post_init__(self):
        if not self.length_mi > 0:
            raise ValueError(f"job {self.job_id}: length_mi must be > 0, got {self.length_mi}")
        if not self.memory_mb >= 0:
            raise ValueError(f"job {self.job_id}: memory_mb must be >= 0, got {self.memory_mb}")


@dataclass(frozen=True)
class Resource:
    resource_id: str
    name: str
    mips: Number
    bandwidth_mbps: Number
    memory_mb: Number
    enter_time: Number = 0.0

    def __post_init__(self):
        for field in ("mips", "bandwidth_mbps", "memory_mb"):
            value = getattr(self, field)
            if not value > 0:
                raise ValueError(f"resource {self.resource_id}: {field} must be > 0, got {value}")


@dataclass(frozen=True)
class SchedulingParams:
    granularity_s: Number = 3.0
    # defaults to granularity_s when omitted
    tcomm_s: Optional[Number] = None

    def __post_init__(self):
        if self.tcomm_s is None:
            object.__setattr__(self, "tcomm_s", self.granularity_s)
        if not self.granularity_s > 0:
            raise ValueError(f"granularity_s must be > 0, got {self.granularity_s}")
        if not self.tcomm_s > 0:
            raise ValueError(f"tcomm_s must be > 0, got {self.tcomm_s}")


@dataclass(frozen=True)
class GroupedJob:
    """An ordered batch of jobs bound for one resource.

    ``total_mi`` and ``total_memory_mb`` are exact sums (Fractions).
    Use :meth:`from_jobs` rather than filling the totals by hand.
    """

    group_id: str
    resource_id: str
    members: tuple[str, ...]
    total_mi: Fraction
    total_memory_mb: Fraction

    def __post_init__(self):
        if not self.members:
            raise ValueError(f"group {self.group_id} has no members")

    @classmethod
    def from_jobs(cls, group_id: str, resource_id: str, jobs: Sequence[Job]) -> "GroupedJob":
        seqs = [j.submit_seq for j in jobs]
        if seqs != sorted(seqs):
            raise ValueError(f"group {group_id}: members must be in submission order")
        return cls(
            group_id=group_id,
            resource_id=resource_id,
            members=tuple(j.job_id for j in jobs),
            total_mi=sum((exact(j.length_mi) for j in jobs), Fraction(0)),
            total_memory_mb=sum((exact(j.memory_mb) for j in jobs), Fraction(0)),
        )

    def moved_to(self, resource_id: str) -> "GroupedJob":
        return GroupedJob(self.group_id, resource_id, self.members, self.total_mi, self.total_memory_mb)


@dataclass(frozen=True)
class Cluster:
    cluster_id: str
    resource_ids: tuple[str, ...]

    def __post_init__(self):
        if not self.resource_ids:
            raise ValueError(f"cluster {self.cluster_id} has no resources")
        if len(set(self.resource_ids)) != len(self.resource_ids):
            raise ValueError(f"cluster {self.cluster_id} lists a resource twice")


def validate_clusters(clusters: Iterable[Cluster], resource_ids: Iterable[str]) -> dict[str, str]:
    """Check every cluster member is known and belongs to one cluster only.

    Returns the resource_id -> cluster_id map.
    """
    known = set(resource_ids)
    owner: dict[str, str] = {}
    for cluster in clusters:
        for rid in cluster.resource_ids:
            if rid not in known:
                raise ValueError(f"cluster {cluster.cluster_id}: unknown resource {rid}")
            if rid in owner:
                raise ValueError(
                    f"resource {rid} is in both {owner[rid]} and {cluster.cluster_id}"
                )
            owner[rid] = cluster.cluster_id
    return owner


def group_capacity_mi(resource: Resource, params: SchedulingParams) -> Fraction:
    """MI a resource can process within one granularity window."""
    return exact(resource.mips) * exact(params.granularity_s)


def transfer_capacity_mb(resource: Resource, params: SchedulingParams) -> Fraction:
    """Mb a resource can receive within the communication allowance."""
    return exact(resource.bandwidth_mbps) * exact(params.tcomm_s)


@dataclass(frozen=True)
class Feasibility:
    ok: bool
    violated: Optional[str] = None  # first failing condition label

    def __bool__(self):
        return self.ok


def condition_flags(
    total_mi: Number, total_memory_mb: Number, resource: Resource, params: SchedulingParams
) -> dict[str, bool]:
    """Evaluate all three packing conditions independently of mode."""
    mi = exact(total_mi)
    mem = exact(total_memory_mb)
    return {
        COND_MI: mi <= group_capacity_mi(resource, params),
        COND_MEMORY: mem <= exact(resource.memory_mb),
        COND_TRANSFER: mem <= transfer_capacity_mb(resource, params),
    }


def check_totals_feasible(
    total_mi: Number,
    total_memory_mb: Number,
    resource: Resource,
    params: SchedulingParams,
    mode: Mode = Mode.JGS,
) -> Feasibility:
    flags = condition_flags(total_mi, total_memory_mb, resource, params)
    checked = CONDITIONS if Mode(mode) is Mode.JGS else (COND_MI,)
    for cond in checked:
        if not flags[cond]:
            return Feasibility(False, cond)
    return Feasibility(True)


def check_group_feasible(
    group: GroupedJob, resource: Resource, params: SchedulingParams, mode: Mode = Mode.JGS
) -> Feasibility:
    return check_totals_feasible(group.total_mi, group.total_memory_mb, resource, params, mode)
