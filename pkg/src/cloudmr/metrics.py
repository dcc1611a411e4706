"""Per-job performance metrics over finished task records.

All functions take the complete record set of one job (maps and reduces)
and are pure; they never look at the engine.  Execution time of a task is
finish - start, which under processor sharing already includes queueing
alongside co-resident tasks.

The headline metrics combine the two phases:

* average / max / min execution time: the map-phase statistic plus the
  reduce-phase statistic (mean+mean, max+max, min+min).
* makespan: finish time of the job's last reduce, measured from
  simulation start.
* delay time: start of the last map plus start of the last reduce minus
  finish of the last map ("last" by time).  With a common map start this
  collapses to exactly the fetch stall plus the shuffle stall, and to
  exactly 0.0 when delays are off.
* vm computation cost: each task's execution time billed at its host
  VM's per-second price, summed over all tasks.
"""

from __future__ import annotations

from dataclasses import dataclass
from statistics import fmean

from .delays import DelayBreakdown
from .errors import MetricError
from .mapreduce import Task, TaskKind

#: Relative slack for cross-checks between independently computed values.
_REL_EPS = 1e-9


@dataclass(frozen=True)
class TaskRecord:
    """Immutable snapshot of one finished task."""

    job_id: int
    task_id: int
    kind: TaskKind
    vm_id: int
    start_time: float
    finish_time: float

    @property
    def exec_time(self) -> float:
        return self.finish_time - self.start_time

    @classmethod
    def from_task(cls, task: Task) -> "TaskRecord":
        if task.start_time is None or task.finish_time is None \
                or task.vm_id is None:
            raise MetricError(f"task {task.job_id}/{task.task_id} is not "
                              f"finished; cannot snapshot")
        return cls(task.job_id, task.task_id, task.kind, task.vm_id,
                   task.start_time, task.finish_time)


def _split_kinds(records):
    maps = [r for r in records if r.kind is TaskKind.MAP]
    reduces = [r for r in records if r.kind is TaskKind.REDUCE]
    if not maps or not reduces:
        raise MetricError("record set must contain at least one map and "
                          "one reduce")
    for r in records:
        if r.finish_time is None or r.start_time is None:
            raise MetricError(f"task {r.job_id}/{r.task_id} is unfinished")
        if r.finish_time < r.start_time:
            raise MetricError(f"task {r.job_id}/{r.task_id} finished "
                              f"before it started")
    return maps, reduces


def average_execution_time(records) -> float:
    maps, reduces = _split_kinds(records)
    return fmean(r.exec_time for r in maps) + \
        fmean(r.exec_time for r in reduces)


def max_execution_time(records) -> float:
    maps, reduces = _split_kinds(records)
    return max(r.exec_time for r in maps) + \
        max(r.exec_time for r in reduces)


def min_execution_time(records) -> float:
    maps, reduces = _split_kinds(records)
    return min(r.exec_time for r in maps) + \
        min(r.exec_time for r in reduces)


def makespan(records) -> float:
    _, reduces = _split_kinds(records)
    return max(r.finish_time for r in reduces)


def delay_time(records, expected: DelayBreakdown | None = None) -> float:
    """Measured stall: time the job spent not computing.

    With ``expected`` given, the measurement is cross-checked against the
    configured breakdown; disagreement means the run violated its own
    delay model and is reported as an error rather than smoothed over.
    """
    maps, reduces = _split_kinds(records)
    last_map_start = max(r.start_time for r in maps)
    last_map_finish = max(r.finish_time for r in maps)
    last_reduce_start = max(r.start_time for r in reduces)
    measured = last_map_start + last_reduce_start - last_map_finish
    if expected is not None:
        slack = _REL_EPS * max(1.0, abs(expected.total))
        if abs(measured - expected.total) > slack:
            raise MetricError(
                f"measured delay {measured!r} disagrees with the "
                f"configured breakdown {expected.total!r}")
    return measured


def vm_computation_cost(records, cost_by_vm: dict) -> float:
    maps, reduces = _split_kinds(records)
    total = 0.0
    for r in maps + reduces:
        try:
            total += r.exec_time * cost_by_vm[r.vm_id]
        except KeyError:
            raise MetricError(f"no cost rate for VM {r.vm_id}") from None
    return total


@dataclass(frozen=True)
class JobReport:
    """Everything reported for one finished job."""

    job_id: int
    job_type: str
    mr_combination: str
    nm: int
    nr: int
    mode: str
    avg_exec_s: float
    max_exec_s: float
    min_exec_s: float
    makespan_s: float
    delay_s: float
    vm_cost: float
    network_cost: float
    fetch_s: float
    shuffle_s: float
    records: tuple[TaskRecord, ...]


def build_job_report(job, records, *, mode: str,
                     expected: DelayBreakdown, network_cost: float,
                     cost_by_vm: dict) -> JobReport:
    snapshots = tuple(r if isinstance(r, TaskRecord) else
                      TaskRecord.from_task(r) for r in records)
    avg = average_execution_time(snapshots)
    high = max_execution_time(snapshots)
    low = min_execution_time(snapshots)
    slack = _REL_EPS * max(1.0, abs(high))
    if not (low <= avg + slack and avg <= high + slack):
        raise MetricError(f"metric ordering broken: min={low!r} "
                          f"avg={avg!r} max={high!r}")
    span = makespan(snapshots)
    if span + slack < high:
        raise MetricError(f"makespan {span!r} below max execution {high!r}")
    return JobReport(
        job_id=job.job_id,
        job_type=job.job_type,
        mr_combination=job.mr_combination,
        nm=job.nm,
        nr=job.nr,
        mode=mode,
        avg_exec_s=avg,
        max_exec_s=high,
        min_exec_s=low,
        makespan_s=span,
        delay_s=delay_time(snapshots, expected),
        vm_cost=vm_computation_cost(snapshots, cost_by_vm),
        network_cost=network_cost,
        fetch_s=expected.fetch,
        shuffle_s=expected.shuffle,
        records=snapshots,
    )
