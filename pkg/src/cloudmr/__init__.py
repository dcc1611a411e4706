"""Discrete-event simulator for MapReduce batch jobs on cloud datacenters."""

__version__ = "0.1.0"

from .cloud import Datacenter, DatacenterConfig, VM_CATALOG, VmSpec
from .delays import DelayMode, DelayModel
from .groups import run_group
from .kernel import Engine, EventTag, SimEntity, SimEvent
from .mapreduce import JOB_CATALOG, JobSpec, split_job
from .metrics import JobReport, TaskRecord
from .runner import RunResult, run_point, run_scenario
from .scenario import (
    Scenario,
    default_scenario,
    load_scenario,
    parse_scenario,
    validate_scenario,
)

__all__ = [
    "__version__",
    "Datacenter", "DatacenterConfig", "VM_CATALOG", "VmSpec",
    "DelayMode", "DelayModel",
    "run_group",
    "Engine", "EventTag", "SimEntity", "SimEvent",
    "JOB_CATALOG", "JobSpec", "split_job",
    "JobReport", "TaskRecord",
    "RunResult", "run_point", "run_scenario",
    "Scenario", "default_scenario", "load_scenario", "parse_scenario",
    "validate_scenario",
]
