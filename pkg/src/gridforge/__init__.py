"""Grid scheduling simulator with RSA-authenticated registration and job grouping."""

from .model import (
    Cluster,
    Feasibility,
    GroupedJob,
    Job,
    Mode,
    Resource,
    SchedulingParams,
    check_group_feasible,
    group_capacity_mi,
    transfer_capacity_mb,
)
from .scheduler import Assignment, GroupingOutcome, dispatch, drain_overflow, group_jobs, local_refine
from .engine import ScheduleMetrics, compute_time_s, run_schedule, transfer_time_s

__version__ = "0.1.0"
