"""End-to-end run: register -> authenticate -> group -> dispatch -> refine -> simulate."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Union

from . import auth
from .engine import ScheduleMetrics, run_schedule
from .model import Cluster, GroupedJob, Job, Mode, Resource, SchedulingParams, condition_flags
from .registry import BAD_SIGNATURE, UNKNOWN_USER, Registry, resource_request, user_request
from .scheduler import (
    Assignment,
    ClusterState,
    GroupingOutcome,
    apply_assignments,
    dispatch,
    drain_overflow,
    group_jobs,
    local_refine,
)
from .scenario import Scenario, resolve_keys

NO_CAPACITY = "no-capacity"
AUTH_REASONS = (UNKNOWN_USER, BAD_SIGNATURE)

SRJM = "srjm"
DJG = "djg"
ALGORITHMS = {SRJM: Mode.JGS, DJG: Mode.DJG}


@dataclass(frozen=True)
class Rejection:
    job_id: str
    user: str
    reason: str


@dataclass
class RunResult:
    algorithm: str
    mode: Mode
    params: SchedulingParams
    registry: Registry
    jobs: dict[str, Job]
    groups: list[GroupedJob]
    assignments: list[Assignment]
    metrics: ScheduleMetrics
    clusters: list[Cluster]
    passes: int = 0
    rejected: list[Rejection] = field(default_factory=list)

    @property
    def auth_rejections(self) -> list[Rejection]:
        return [r for r in self.rejected if r.reason in AUTH_REASONS]

    def condition_report(self, group: GroupedJob) -> dict[str, bool]:
        resource = self.registry.resource_characteristics(group.resource_id)
        return condition_flags(group.total_mi, group.total_memory_mb, resource, self.params)


def job_envelope(job: Job, signer_key: auth.KeyPair, hash_alg) -> auth.SignedEnvelope:
    fields = {
        "job_id": job.job_id,
        "user_id": job.user_id,
        "length_mi": repr(job.length_mi),
        "memory_mb": repr(job.memory_mb),
        "submit_seq": job.submit_seq,
    }
    return auth.SignedEnvelope.seal(fields, job.user_id, signer_key.private_part, hash_alg)


def build_registry(scenario: Scenario, keys: Mapping[str, auth.KeyPair]) -> tuple[Registry, dict[str, str]]:
    """Register every scenario user and resource through signed requests."""
    ticks = itertools.count()
    registry = Registry(clock=lambda: float(next(ticks)))
    user_ids = {}
    for user in scenario.users:
        user_ids[user.name] = registry.register_user(
            user_request(user.name, keys[user.name], scenario.hash_alg)
        )
    for r in scenario.resources:
        request = resource_request(
            r.name, r.enter_time, r.mips, r.bandwidth_mbps, r.memory_mb,
            user_ids[r.owner], keys[r.owner], scenario.hash_alg,
        )
        registry.register_resource(request, user_ids[r.owner])
    return registry, user_ids


def registered_resources(registry: Registry) -> list[Resource]:
    return sorted(
        (e.resource for e in registry.resources.values()),
        key=lambda r: (r.enter_time, r.resource_id),
    )


def schedule_jobs(
    jobs: Sequence[Job],
    resources: Sequence[Resource],
    clusters: Sequence[Cluster],
    registry: Registry,
    params: SchedulingParams,
    mode: Mode,
) -> tuple[GroupingOutcome, list[Assignment], list[GroupedJob]]:
    """Group, drain JobList1, dispatch globally, then refine per cluster.

    Returns the grouping outcome, the final assignments and the groups
    rebound to their final resources. Dispatched resources are left busy.
    """
    outcome = group_jobs(jobs, resources, params, mode)
    outcome = drain_overflow(outcome, resources, params, mode)
    assignments = dispatch(outcome.groups, clusters, registry)
    group_map = {g.group_id: g for g in outcome.groups}
    refined: dict[str, Assignment] = {}
    for cluster in clusters:
        mine = [a for a in assignments if a.cluster_id == cluster.cluster_id]
        if not mine:
            continue
        state = ClusterState.from_assignments(cluster, resources, mine)
        for a in local_refine(mine, state, group_map, params, mode):
            refined[a.group_id] = a
    assignments = [refined[a.group_id] for a in assignments]
    return outcome, assignments, apply_assignments(outcome.groups, assignments)


def run_pipeline(
    scenario: Scenario,
    algorithm: Union[str, Mode] = SRJM,
    keys: Optional[Mapping[str, auth.KeyPair]] = None,
    authenticate: Optional[bool] = None,
) -> RunResult:
    """Run one scheduling pass over ``scenario``.

    ``authenticate`` defaults to True for SRJM and False for the DJG
    baseline, which has no security layer.
    """
    if isinstance(algorithm, Mode):
        mode = algorithm
        algorithm = SRJM if mode is Mode.JGS else DJG
    else:
        mode = ALGORITHMS[algorithm]
    if authenticate is None:
        authenticate = mode is Mode.JGS
    keys = resolve_keys(scenario, keys)
    params = scenario.params

    registry, user_ids = build_registry(scenario, keys)
    # registry ids equal scenario names (names are unique per scenario)
    clusters = [Cluster(c.cluster_id, c.resource_names) for c in scenario.clusters]

    rejected: list[Rejection] = []
    accepted: list[Job] = []
    all_jobs: dict[str, Job] = {}
    submitter: dict[str, str] = {}
    for seq, spec in enumerate(scenario.jobs, 1):
        job = Job(f"J{seq}", user_ids[spec.user], spec.length_mi, spec.memory_mb, seq)
        all_jobs[job.job_id] = job
        submitter[job.job_id] = spec.user
        if authenticate:
            envelope = job_envelope(job, keys[spec.signer or spec.user], scenario.hash_alg)
            verdict = registry.authenticate_submission(envelope, job.user_id)
            if not verdict:
                rejected.append(Rejection(job.job_id, spec.user, verdict.reason))
                continue
        accepted.append(job)

    available = [
        registry.resource_characteristics(r.resource_id) for r in registry.available_resources()
    ]
    outcome, assignments, groups = schedule_jobs(accepted, available, clusters, registry, params, mode)
    rejected.extend(Rejection(jid, submitter[jid], NO_CAPACITY) for jid in outcome.rejected)
    all_resources = registered_resources(registry)

    metrics = run_schedule(
        assignments, groups, all_resources, params, scenario.overhead_s,
        rejected_jobs=[r.job_id for r in rejected],
    )
    # simulated completion frees the resources again
    for a in assignments:
        registry.mark_available(a.resource_id)

    return RunResult(
        algorithm=algorithm,
        mode=mode,
        params=params,
        registry=registry,
        jobs=all_jobs,
        groups=groups,
        assignments=assignments,
        metrics=metrics,
        clusters=clusters,
        passes=outcome.passes,
        rejected=rejected,
    )


@dataclass(frozen=True)
class ComparisonRow:
    algorithm: str
    jobs: int
    total_processing_s: float
    makespan_s: float
    mean_utilization: float
    groups: int
    rejected: int


def summarize(result: RunResult, jobs: int) -> ComparisonRow:
    m = result.metrics
    return ComparisonRow(
        algorithm=result.algorithm,
        jobs=jobs,
        total_processing_s=m.total_processing_s,
        makespan_s=m.makespan_s,
        mean_utilization=m.mean_utilization,
        groups=len(result.groups),
        rejected=len(result.rejected),
    )


def compare_algorithms(
    scenario: Scenario, keys: Optional[Mapping[str, auth.KeyPair]] = None
) -> list[ComparisonRow]:
    """Run SRJM (JGS + authentication) and the DJG baseline on the same inputs."""
    keys = resolve_keys(scenario, keys)
    return [
        summarize(run_pipeline(scenario, algo, keys), len(scenario.jobs))
        for algo in (SRJM, DJG)
    ]
