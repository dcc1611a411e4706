"""Scenario files: parsing, semantic validation, sweep expansion.

A scenario is a YAML mapping.  Every key is optional except ``jobs``;
omitted sections fall back to the reference catalogs (one mid-size
datacenter, Small VMs, three of them, delays off).

::

    datacenter:              # capacity totals
      pes_total: 500
      ram_total: 20480
      storage_total: 1000000
      bandwidth: 1000
      mips_per_pe: 1000
    capacity_model: shared-mips      # or pes-aggregate
    vm:
      spec: Small            # catalog name, or inline VmSpec fields
      count: 3
    jobs:
      - job_type: Small      # catalog name fills length/data_size
        mr: M4R2             # or nm: 4 / nr: 2
        reduce_ratio: 1.0
        vm_ids: [0, 1]       # optional pinning
    delay:
      mode: network-delay    # or no-delay
      storage_bandwidth: 1000
      network_cost_per_unit: 10.625
    sweep:                   # at most one axis
      mr_combination: {from: 1, to: 20}    # or a list of map counts
      # vm_count: [3, 6, 9]
      # vm_type: [Small, Medium, Large]
      # job_type: [Small, Medium, Big]
    output:
      path: results.csv
      format: csv            # or json

Parse errors carry the dotted path of the offending key, e.g.
``jobs[0].nm: must be an integer >= 1``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional

import yaml

from .cloud import (
    CAPACITY_MODELS,
    DEFAULT_CAPACITY_MODEL,
    Datacenter,
    DatacenterConfig,
    VM_CATALOG,
    VmSpec,
)
from .delays import DelayMode, DelayModel
from .errors import ScenarioError, ValidationError
from .mapreduce import JOB_CATALOG, JobSpec, parse_mr

SWEEP_AXES = ("mr_combination", "vm_count", "vm_type", "job_type")
OUTPUT_FORMATS = ("csv", "json")


@dataclass(frozen=True)
class Sweep:
    axis: str
    values: tuple


@dataclass(frozen=True)
class OutputSpec:
    path: Optional[str] = None
    format: str = "csv"


@dataclass(frozen=True)
class Scenario:
    datacenter: DatacenterConfig
    vm_spec: VmSpec
    vm_count: int
    capacity_model: str
    jobs: tuple[JobSpec, ...]
    delay: DelayModel
    sweep: Optional[Sweep] = None
    output: Optional[OutputSpec] = None


def default_scenario(jobs: tuple[JobSpec, ...], **overrides) -> Scenario:
    """Scenario with catalog defaults everywhere but the given jobs."""
    base = Scenario(
        datacenter=DatacenterConfig(),
        vm_spec=VM_CATALOG["Small"],
        vm_count=3,
        capacity_model=DEFAULT_CAPACITY_MODEL,
        jobs=tuple(jobs),
        delay=DelayModel(),
    )
    return dataclasses.replace(base, **overrides) if overrides else base


# -- low-level checked readers ------------------------------------------------


def _mapping(node, path, allowed):
    if node is None:
        return {}
    if not isinstance(node, dict):
        raise ScenarioError("expected a mapping", path)
    unknown = [k for k in node if k not in allowed]
    if unknown:
        raise ScenarioError(
            f"unknown key(s) {', '.join(map(repr, unknown))}; expected "
            f"one of {', '.join(sorted(allowed))}", path)
    return node


def _int(node, path, minimum=1):
    if isinstance(node, bool) or not isinstance(node, int):
        raise ScenarioError(f"must be an integer, got {node!r}", path)
    if node < minimum:
        raise ScenarioError(f"must be >= {minimum}, got {node}", path)
    return node


def _number(node, path):
    if isinstance(node, bool) or not isinstance(node, (int, float)):
        raise ScenarioError(f"must be a number, got {node!r}", path)
    if node <= 0:
        raise ScenarioError(f"must be > 0, got {node}", path)
    return float(node)


def _string(node, path):
    if not isinstance(node, str) or not node:
        raise ScenarioError(f"must be a non-empty string, got {node!r}", path)
    return node


# -- section parsers ----------------------------------------------------------


def _parse_datacenter(node) -> DatacenterConfig:
    fields = ("pes_total", "ram_total", "storage_total", "bandwidth",
              "mips_per_pe")
    mapping = _mapping(node, "datacenter", fields)
    kwargs = {}
    for name in ("pes_total", "ram_total", "storage_total"):
        if name in mapping:
            kwargs[name] = _int(mapping[name], f"datacenter.{name}")
    for name in ("bandwidth", "mips_per_pe"):
        if name in mapping:
            kwargs[name] = _number(mapping[name], f"datacenter.{name}")
    return DatacenterConfig(**kwargs)


def _parse_vm(node) -> tuple[VmSpec, int]:
    mapping = _mapping(node, "vm", ("spec", "count"))
    spec_node = mapping.get("spec", "Small")
    if isinstance(spec_node, str):
        if spec_node not in VM_CATALOG:
            raise ScenarioError(
                f"unknown VM type {spec_node!r}; catalog has "
                f"{', '.join(VM_CATALOG)}", "vm.spec")
        spec = VM_CATALOG[spec_node]
    else:
        fields = ("name", "image_size", "ram", "mips", "bandwidth", "pes",
                  "cost_per_sec")
        smap = _mapping(spec_node, "vm.spec", fields)
        for required in fields:
            if required not in smap:
                raise ScenarioError(f"missing key {required!r}", "vm.spec")
        try:
            spec = VmSpec(
                name=_string(smap["name"], "vm.spec.name"),
                image_size=_int(smap["image_size"], "vm.spec.image_size"),
                ram=_int(smap["ram"], "vm.spec.ram"),
                mips=_number(smap["mips"], "vm.spec.mips"),
                bandwidth=_number(smap["bandwidth"], "vm.spec.bandwidth"),
                pes=_int(smap["pes"], "vm.spec.pes"),
                cost_per_sec=_number(smap["cost_per_sec"],
                                     "vm.spec.cost_per_sec"),
            )
        except ValidationError as exc:
            raise ScenarioError(str(exc), "vm.spec") from exc
    count = _int(mapping.get("count", 3), "vm.count")
    return spec, count


def _parse_job(node, index: int) -> JobSpec:
    path = f"jobs[{index}]"
    fields = ("job_id", "job_type", "mr", "nm", "nr", "length", "data_size",
              "reduce_ratio", "vm_ids")
    mapping = _mapping(node, path, fields)
    if not mapping:
        raise ScenarioError("job entry must not be empty", path)
    if "mr" in mapping and ("nm" in mapping or "nr" in mapping):
        raise ScenarioError("give either mr or nm/nr, not both", path)
    if "mr" in mapping:
        try:
            nm, nr = parse_mr(_string(mapping["mr"], f"{path}.mr"))
        except ValidationError as exc:
            raise ScenarioError(str(exc), f"{path}.mr") from exc
    else:
        nm = _int(mapping.get("nm", 1), f"{path}.nm")
        nr = _int(mapping.get("nr", 1), f"{path}.nr")
    job_type = _string(mapping.get("job_type", "Small"), f"{path}.job_type")
    if job_type in JOB_CATALOG:
        length, data_size = JOB_CATALOG[job_type]
    else:
        if "length" not in mapping or "data_size" not in mapping:
            raise ScenarioError(
                f"job_type {job_type!r} is not in the catalog "
                f"({', '.join(JOB_CATALOG)}); give length and data_size "
                f"explicitly", path)
        length = data_size = None
    if "length" in mapping:
        length = _number(mapping["length"], f"{path}.length")
    if "data_size" in mapping:
        data_size = _number(mapping["data_size"], f"{path}.data_size")
    vm_ids = None
    if "vm_ids" in mapping:
        node_ids = mapping["vm_ids"]
        if not isinstance(node_ids, list) or not node_ids:
            raise ScenarioError("must be a non-empty list of VM ids",
                                f"{path}.vm_ids")
        vm_ids = tuple(_int(v, f"{path}.vm_ids[{i}]", minimum=0)
                       for i, v in enumerate(node_ids))
    try:
        return JobSpec(
            job_id=_int(mapping["job_id"], f"{path}.job_id", minimum=0)
            if "job_id" in mapping else index,
            job_type=job_type,
            length=length,
            data_size=data_size,
            nm=nm,
            nr=nr,
            reduce_ratio=_number(mapping.get("reduce_ratio", 1.0),
                                 f"{path}.reduce_ratio"),
            vm_ids=vm_ids,
        )
    except ValidationError as exc:
        raise ScenarioError(str(exc), path) from exc


def _parse_delay(node) -> DelayModel:
    mapping = _mapping(node, "delay",
                       ("mode", "storage_bandwidth", "network_cost_per_unit"))
    kwargs = {}
    if "mode" in mapping:
        try:
            kwargs["mode"] = DelayMode.parse(
                _string(mapping["mode"], "delay.mode"))
        except ValidationError as exc:
            raise ScenarioError(str(exc), "delay.mode") from exc
    for name in ("storage_bandwidth", "network_cost_per_unit"):
        if name in mapping:
            kwargs[name] = _number(mapping[name], f"delay.{name}")
    return DelayModel(**kwargs)


def _parse_sweep(node) -> Optional[Sweep]:
    if node is None:
        return None
    mapping = _mapping(node, "sweep", SWEEP_AXES)
    if len(mapping) != 1:
        raise ScenarioError(
            f"exactly one sweep axis required, got {len(mapping)}", "sweep")
    axis, raw = next(iter(mapping.items()))
    path = f"sweep.{axis}"
    if axis == "mr_combination":
        if isinstance(raw, dict):
            rmap = _mapping(raw, path, ("from", "to"))
            lo = _int(rmap.get("from"), f"{path}.from")
            hi = _int(rmap.get("to"), f"{path}.to")
            if hi < lo:
                raise ScenarioError(f"range is empty: from {lo} to {hi}",
                                    path)
            values = tuple(range(lo, hi + 1))
        elif isinstance(raw, list) and raw:
            values = tuple(_int(v, f"{path}[{i}]")
                           for i, v in enumerate(raw))
        else:
            raise ScenarioError("expected {from, to} or a list of map "
                                "counts", path)
    elif axis == "vm_count":
        if not isinstance(raw, list) or not raw:
            raise ScenarioError("expected a list of counts", path)
        values = tuple(_int(v, f"{path}[{i}]") for i, v in enumerate(raw))
    else:
        if not isinstance(raw, list) or not raw:
            raise ScenarioError("expected a list of names", path)
        catalog = VM_CATALOG if axis == "vm_type" else JOB_CATALOG
        values = tuple(_string(v, f"{path}[{i}]")
                       for i, v in enumerate(raw))
        unknown = [v for v in values if v not in catalog]
        if unknown:
            raise ScenarioError(
                f"unknown name(s) {', '.join(map(repr, unknown))}; catalog "
                f"has {', '.join(catalog)}", path)
    return Sweep(axis=axis, values=values)


def _parse_output(node) -> Optional[OutputSpec]:
    if node is None:
        return None
    mapping = _mapping(node, "output", ("path", "format"))
    fmt = mapping.get("format", "csv")
    if fmt not in OUTPUT_FORMATS:
        raise ScenarioError(f"must be one of {', '.join(OUTPUT_FORMATS)}, "
                            f"got {fmt!r}", "output.format")
    path = None
    if "path" in mapping:
        path = _string(mapping["path"], "output.path")
    return OutputSpec(path=path, format=fmt)


# -- entry points --------------------------------------------------------------


def parse_scenario(text: str) -> Scenario:
    try:
        root = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"not valid YAML: {exc}") from exc
    if root is None:
        raise ScenarioError("scenario document is empty")
    top = _mapping(root, "scenario",
                   ("datacenter", "capacity_model", "vm", "jobs", "delay",
                    "sweep", "output"))
    if "jobs" not in top or not isinstance(top["jobs"], list) \
            or not top["jobs"]:
        raise ScenarioError("must be a non-empty list of jobs", "jobs")
    capacity_model = top.get("capacity_model", DEFAULT_CAPACITY_MODEL)
    if capacity_model not in CAPACITY_MODELS:
        raise ScenarioError(
            f"must be one of {', '.join(CAPACITY_MODELS)}, "
            f"got {capacity_model!r}", "capacity_model")
    spec, count = _parse_vm(top.get("vm"))
    jobs = tuple(_parse_job(node, i) for i, node in enumerate(top["jobs"]))
    if len({j.job_id for j in jobs}) != len(jobs):
        raise ScenarioError("job ids must be unique", "jobs")
    return Scenario(
        datacenter=_parse_datacenter(top.get("datacenter")),
        vm_spec=spec,
        vm_count=count,
        capacity_model=capacity_model,
        jobs=jobs,
        delay=_parse_delay(top.get("delay")),
        sweep=_parse_sweep(top.get("sweep")),
        output=_parse_output(top.get("output")),
    )


def load_scenario(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_scenario(handle.read())


def expand_sweep(scenario: Scenario) -> list[tuple[object, Scenario]]:
    """One (sweep value, concrete scenario) pair per sweep point.

    Without a sweep the scenario itself is the single point (value None).
    """
    if scenario.sweep is None:
        return [(None, scenario)]
    base = dataclasses.replace(scenario, sweep=None)
    axis = scenario.sweep.axis
    points = []
    for value in scenario.sweep.values:
        if axis == "mr_combination":
            jobs = tuple(dataclasses.replace(j, nm=value)
                         for j in base.jobs)
            points.append((value, dataclasses.replace(base, jobs=jobs)))
        elif axis == "vm_count":
            points.append((value, dataclasses.replace(base, vm_count=value)))
        elif axis == "vm_type":
            points.append((value, dataclasses.replace(
                base, vm_spec=VM_CATALOG[value])))
        else:
            length, data_size = JOB_CATALOG[value]
            jobs = tuple(dataclasses.replace(j, job_type=value,
                                             length=length,
                                             data_size=data_size)
                         for j in base.jobs)
            points.append((value, dataclasses.replace(base, jobs=jobs)))
    return points


def validate_scenario(scenario: Scenario) -> Scenario:
    """Semantic checks that cross section boundaries.

    Every sweep point must be provisionable, and VM pinnings must land
    inside the provisioned id range.  Raises on the first problem; returns
    the scenario unchanged so calls can be chained.
    """
    for _, point in expand_sweep(scenario):
        Datacenter(point.datacenter, point.capacity_model) \
            .provision(point.vm_spec, point.vm_count)
        for i, job in enumerate(point.jobs):
            if job.vm_ids is None:
                continue
            bad = [v for v in job.vm_ids if v >= point.vm_count]
            if bad:
                raise ScenarioError(
                    f"VM ids {bad} out of range; only {point.vm_count} VMs "
                    f"are provisioned (ids 0..{point.vm_count - 1})",
                    f"jobs[{i}].vm_ids")
    return scenario
