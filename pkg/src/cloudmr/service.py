"""HTTP facade over the simulator.

The service is stateless: every request provisions its own datacenter,
runs to completion, and returns the full result.  Errors surface as a
uniform ``{"category", "detail"}`` envelope where the category matches
the exception taxonomy (parse, provision, run), so clients can map
failures without string matching.

Endpoints: GET /health, GET /defaults, POST /validate, POST /run,
POST /groups/{group}.
"""

from __future__ import annotations

from typing import Optional

from fastapi import FastAPI, Path, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import __version__
from .cloud import DatacenterConfig, VM_CATALOG
from .delays import (
    DEFAULT_NETWORK_COST_PER_UNIT,
    DEFAULT_STORAGE_BANDWIDTH,
    DelayMode,
)
from .errors import SimulationError
from .groups import GROUPS, run_group
from .mapreduce import JOB_CATALOG
from .metrics import JobReport
from .runner import RunResult, run_scenario
from .scenario import parse_scenario, validate_scenario

_STATUS_BY_CATEGORY = {"parse": 422, "provision": 409, "run": 500}


class ReportRow(BaseModel):
    job_id: int
    mr_combination: str
    vm_count: int
    vm_type: str
    job_type: str
    avg_exec_s: float
    max_exec_s: float
    min_exec_s: float
    makespan_s: float
    delay_s: float
    vm_cost: float
    network_cost: float


class TaskRecordOut(BaseModel):
    job_id: int
    task_id: int
    kind: str
    vm_id: int
    start_time: float
    finish_time: float
    exec_time: float


class JobReportOut(BaseModel):
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
    tasks: list[TaskRecordOut]


class RunRequest(BaseModel):
    scenario: str = Field(description="scenario document, YAML")
    include_trace: bool = False
    include_tasks: bool = False


class GroupRequest(BaseModel):
    network_delay: bool = False
    include_trace: bool = False


class RunResponse(BaseModel):
    mode: str
    rows: list[ReportRow]
    reports: Optional[list[JobReportOut]] = None
    trace: Optional[str] = None


class GroupResponse(RunResponse):
    group: int


class ValidateRequest(BaseModel):
    scenario: str


class ValidateResponse(BaseModel):
    valid: bool
    jobs: int = 0
    sweep_points: int = 0
    category: Optional[str] = None
    detail: Optional[str] = None


class HealthResponse(BaseModel):
    status: str
    version: str


app = FastAPI(title="cloudmr", version=__version__)


@app.exception_handler(SimulationError)
async def _simulation_error(_request: Request, exc: SimulationError):
    return JSONResponse(
        status_code=_STATUS_BY_CATEGORY.get(exc.category, 500),
        content={"category": exc.category, "detail": str(exc)})


def _report_out(report: JobReport) -> JobReportOut:
    return JobReportOut(
        job_id=report.job_id, job_type=report.job_type,
        mr_combination=report.mr_combination, nm=report.nm, nr=report.nr,
        mode=report.mode, avg_exec_s=report.avg_exec_s,
        max_exec_s=report.max_exec_s, min_exec_s=report.min_exec_s,
        makespan_s=report.makespan_s, delay_s=report.delay_s,
        vm_cost=report.vm_cost, network_cost=report.network_cost,
        fetch_s=report.fetch_s, shuffle_s=report.shuffle_s,
        tasks=[TaskRecordOut(job_id=r.job_id, task_id=r.task_id,
                             kind=r.kind.value, vm_id=r.vm_id,
                             start_time=r.start_time,
                             finish_time=r.finish_time,
                             exec_time=r.exec_time)
               for r in report.records])


def _run_response(result: RunResult, include_tasks: bool) -> dict:
    return {
        "mode": result.mode,
        "rows": result.rows,
        "reports": [_report_out(r) for r in result.reports]
        if include_tasks else None,
        "trace": result.trace,
    }


@app.get("/health", response_model=HealthResponse)
async def health() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__)


@app.get("/defaults")
async def defaults() -> dict:
    datacenter = DatacenterConfig()
    return {
        "datacenter": {
            "pes_total": datacenter.pes_total,
            "ram_total": datacenter.ram_total,
            "storage_total": datacenter.storage_total,
            "bandwidth": datacenter.bandwidth,
            "mips_per_pe": datacenter.mips_per_pe,
        },
        "vm_catalog": {
            name: {"image_size": spec.image_size, "ram": spec.ram,
                   "mips": spec.mips, "bandwidth": spec.bandwidth,
                   "pes": spec.pes, "cost_per_sec": spec.cost_per_sec}
            for name, spec in VM_CATALOG.items()},
        "job_catalog": {
            name: {"length": length, "data_size": data_size}
            for name, (length, data_size) in JOB_CATALOG.items()},
        "delay": {
            "modes": [mode.value for mode in DelayMode],
            "storage_bandwidth": DEFAULT_STORAGE_BANDWIDTH,
            "network_cost_per_unit": DEFAULT_NETWORK_COST_PER_UNIT,
        },
        "groups": list(GROUPS),
    }


@app.post("/validate", response_model=ValidateResponse)
async def validate(request: ValidateRequest) -> ValidateResponse:
    try:
        scenario = validate_scenario(parse_scenario(request.scenario))
    except SimulationError as exc:
        return ValidateResponse(valid=False, category=exc.category,
                                detail=str(exc))
    points = 1 if scenario.sweep is None else len(scenario.sweep.values)
    return ValidateResponse(valid=True, jobs=len(scenario.jobs),
                            sweep_points=points)


@app.post("/run", response_model=RunResponse, response_model_exclude_none=True)
async def run(request: RunRequest) -> RunResponse:
    scenario = validate_scenario(parse_scenario(request.scenario))
    result = run_scenario(scenario, trace=request.include_trace)
    return RunResponse(**_run_response(result, request.include_tasks))


@app.post("/groups/{group}", response_model=GroupResponse,
          response_model_exclude_none=True)
async def group_run(
        group: int = Path(ge=min(GROUPS), le=max(GROUPS)),
        request: Optional[GroupRequest] = None) -> GroupResponse:
    request = request or GroupRequest()
    result = run_group(group, network_delay=request.network_delay,
                       trace=request.include_trace)
    return GroupResponse(group=group, **_run_response(result, False))
