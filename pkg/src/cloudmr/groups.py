"""The four canned experiment groups.

Every group sweeps the map count from 1 to 20 with a single reduce task on
an otherwise fixed setup (Small job, Small VMs, three of them) and varies
one axis:

1. nothing else: the baseline map/reduce sweep,
2. the VM count over 3, 6, 9,
3. the VM type over Small, Medium, Large,
4. the job size over Small, Medium, Big.

Rows are ordered by the varied axis first, then by map count, one row per
point (each point runs one job on a fresh datacenter).
"""

from __future__ import annotations

import dataclasses

from .cloud import VM_CATALOG
from .delays import DelayMode, DelayModel
from .errors import ValidationError
from .mapreduce import JOB_CATALOG, JobSpec
from .runner import RunResult, row_for, run_point
from .scenario import Scenario, default_scenario

GROUPS = (1, 2, 3, 4)
MAP_COUNTS = tuple(range(1, 21))
VM_COUNTS = (3, 6, 9)
VM_TYPES = ("Small", "Medium", "Large")
JOB_TYPES = ("Small", "Medium", "Big")


def _job(nm: int, job_type: str = "Small") -> JobSpec:
    length, data_size = JOB_CATALOG[job_type]
    return JobSpec(job_id=0, job_type=job_type, length=length,
                   data_size=data_size, nm=nm, nr=1)


def group_scenarios(group: int, *,
                    network_delay: bool = False) -> list[Scenario]:
    if group not in GROUPS:
        raise ValidationError(f"group must be one of {GROUPS}, got {group!r}")
    delay = DelayModel(mode=DelayMode.NETWORK_DELAY if network_delay
                       else DelayMode.NO_DELAY)
    base = default_scenario((_job(1),), delay=delay)
    points = []
    if group == 1:
        for nm in MAP_COUNTS:
            points.append(dataclasses.replace(base, jobs=(_job(nm),)))
    elif group == 2:
        for count in VM_COUNTS:
            for nm in MAP_COUNTS:
                points.append(dataclasses.replace(
                    base, vm_count=count, jobs=(_job(nm),)))
    elif group == 3:
        for vm_type in VM_TYPES:
            for nm in MAP_COUNTS:
                points.append(dataclasses.replace(
                    base, vm_spec=VM_CATALOG[vm_type], jobs=(_job(nm),)))
    else:
        for job_type in JOB_TYPES:
            for nm in MAP_COUNTS:
                points.append(dataclasses.replace(
                    base, jobs=(_job(nm, job_type),)))
    return points


def run_group(group: int, *, network_delay: bool = False,
              trace: bool = False) -> RunResult:
    rows = []
    reports = []
    traces = []
    for point in group_scenarios(group, network_delay=network_delay):
        result = run_point(point, trace=trace)
        reports.extend(result.reports)
        rows.extend(row_for(point, r) for r in result.reports)
        if trace:
            job = point.jobs[0]
            traces.append(f"# point=group{group} vm_count={point.vm_count} "
                          f"vm_type={point.vm_spec.name} "
                          f"job_type={job.job_type} mr={job.mr_combination}\n")
            traces.append(result.trace)
    mode = (DelayMode.NETWORK_DELAY if network_delay
            else DelayMode.NO_DELAY).value
    return RunResult(mode=mode, rows=tuple(rows), reports=tuple(reports),
                     trace="".join(traces) if trace else None)
