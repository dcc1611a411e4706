"""Builds a simulation from a scenario and runs it to completion.

One scenario point = one engine, one datacenter, one broker/job tracker/
task tracker trio.  Sweeps expand into independent points executed in
order; nothing is shared between points, so results do not depend on
which ran first.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .cloud import Datacenter
from .delays import breakdown, network_cost
from .kernel import Engine
from .mapreduce import (
    CatalogSummary,
    JobTracker,
    SequentialBroker,
    TaskTracker,
)
from .metrics import JobReport, build_job_report
from .scenario import Scenario, expand_sweep

#: Column order of every report row, fixed across output formats.
REPORT_COLUMNS = (
    "job_id", "mr_combination", "vm_count", "vm_type", "job_type",
    "avg_exec_s", "max_exec_s", "min_exec_s", "makespan_s", "delay_s",
    "vm_cost", "network_cost",
)


@dataclass(frozen=True)
class RunResult:
    mode: str
    rows: tuple[dict, ...]
    reports: tuple[JobReport, ...]
    trace: Optional[str] = None


@dataclass(frozen=True)
class PointResult:
    """Result of one concrete scenario, infrastructure handles included.

    ``datacenter`` and ``vms`` are the post-run instances so callers can
    audit capacity accounting and per-VM work counters.
    """

    reports: tuple[JobReport, ...]
    trace: Optional[str]
    end_time: float
    datacenter: Datacenter
    vms: tuple


def run_point(scenario: Scenario, *, trace: bool = False) -> PointResult:
    """Run one concrete scenario to completion."""
    datacenter = Datacenter(scenario.datacenter, scenario.capacity_model)
    vms = datacenter.provision(scenario.vm_spec, scenario.vm_count)
    engine = Engine(trace=trace)
    broker = SequentialBroker("broker", scenario.jobs)
    jobtracker = JobTracker("job-tracker", scenario.delay, vms)
    tasktracker = TaskTracker("task-tracker", vms)
    engine.register(broker)
    engine.register(jobtracker)
    engine.register(tasktracker)
    broker.jobtracker_id = jobtracker.entity_id
    broker.tasktracker_id = tasktracker.entity_id
    broker.catalog = CatalogSummary(
        vms=tuple((vm.id, vm.rate) for vm in vms))
    jobtracker.broker = broker
    end_time = engine.run()
    cost_by_vm = {vm.id: vm.spec.cost_per_sec for vm in vms}
    mode = scenario.delay.mode.value
    reports = tuple(
        build_job_report(
            job,
            jobtracker.records_for(job.job_id),
            mode=mode,
            expected=breakdown(job, scenario.delay),
            network_cost=network_cost(job, scenario.delay)
            if mode == "network-delay" else 0.0,
            cost_by_vm=cost_by_vm,
        )
        for job in scenario.jobs)
    return PointResult(reports=reports,
                       trace=engine.trace_text() if trace else None,
                       end_time=end_time, datacenter=datacenter,
                       vms=tuple(vms))


def row_for(scenario: Scenario, report: JobReport) -> dict:
    return {
        "job_id": report.job_id,
        "mr_combination": report.mr_combination,
        "vm_count": scenario.vm_count,
        "vm_type": scenario.vm_spec.name,
        "job_type": report.job_type,
        "avg_exec_s": report.avg_exec_s,
        "max_exec_s": report.max_exec_s,
        "min_exec_s": report.min_exec_s,
        "makespan_s": report.makespan_s,
        "delay_s": report.delay_s,
        "vm_cost": report.vm_cost,
        "network_cost": report.network_cost,
    }


def run_scenario(scenario: Scenario, *, trace: bool = False) -> RunResult:
    """Run the scenario, expanding its sweep if it has one.

    Rows come out in sweep order, jobs in submission order within each
    point.  The trace of a multi-point run separates points with a
    ``# point=<value>`` comment line.
    """
    points = expand_sweep(scenario)
    rows: list[dict] = []
    reports: list[JobReport] = []
    traces: list[str] = []
    for value, point in points:
        result = run_point(point, trace=trace)
        reports.extend(result.reports)
        rows.extend(row_for(point, r) for r in result.reports)
        if trace:
            if scenario.sweep is not None:
                traces.append(f"# point={value}\n")
            traces.append(result.trace)
    return RunResult(
        mode=scenario.delay.mode.value,
        rows=tuple(rows),
        reports=tuple(reports),
        trace="".join(traces) if trace else None,
    )
