"""MapReduce job model and the entities that run it.

A job arrives as a single work length (million instructions) plus a data
volume.  It is split into nm map tasks and nr reduce tasks: maps share the
length equally (any float remainder folds into the last map), each reduce
gets reduce_ratio * length / (nm * nr), and every task's input share is
data_size / (nm + nr).

Three entities cooperate per run:

* ``SequentialBroker`` owns phase ordering.  It handshakes VM
  characteristics with the task tracker, submits jobs, and releases each
  task list only after the previous list has fully completed, with an
  optional lead-in pause per list (the storage fetch before the maps, the
  shuffle before the reduces).
* ``JobTracker`` splits and places jobs, keeps the per-task records, and
  counts completions; when the last reduce of a job lands it reports the
  job complete.
* ``TaskTracker`` drives the VMs.  Task execution is simulated exactly by
  scheduling a wake-up at the next completion boundary of each VM; any
  queue change re-arms the wake-up and stamps the old one stale via a
  per-VM version counter.

Bookkeeping between entities that does not consume simulated time (the
job tracker nudging the broker's sequencer) happens as direct method
calls; everything that takes time or crosses a phase boundary is an
engine event.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import ClassVar, Optional, Sequence

from .cloud import VmInstance
from .delays import DelayModel, fetch_delay, shuffle_delay
from .errors import (
    InternalError,
    ProtocolError,
    SchedulingError,
    ValidationError,
)
from .kernel import EventTag, SimEntity, SimEvent

log = logging.getLogger(__name__)

#: Reference job sizes: name -> (length in MI, data size in MB).
JOB_CATALOG = {
    "Small": (362_880.0, 200_000.0),
    "Medium": (725_760.0, 400_000.0),
    "Big": (1_451_520.0, 800_000.0),
}

_MR_PATTERN = re.compile(r"^M(\d+)R(\d+)$")


def parse_mr(token: str) -> tuple[int, int]:
    """'M4R2' -> (4, 2)."""
    m = _MR_PATTERN.match(token.strip()) if isinstance(token, str) else None
    if not m or int(m.group(1)) < 1 or int(m.group(2)) < 1:
        raise ValidationError(
            f"bad map/reduce combination {token!r}; expected e.g. 'M4R2'")
    return int(m.group(1)), int(m.group(2))


class TaskKind(Enum):
    MAP = "map"
    REDUCE = "reduce"


class TaskStatus(Enum):
    PENDING = "pending"
    FETCHING = "fetching"
    RUNNING = "running"
    DONE = "done"


@dataclass(frozen=True)
class JobSpec:
    """Immutable description of one MapReduce job.

    ``vm_ids`` optionally pins the job to a subset of the provisioned VMs;
    by default it may use all of them.
    """

    job_id: int
    job_type: str
    length: float       # MI across all maps
    data_size: float    # MB
    nm: int
    nr: int
    reduce_ratio: float = 1.0
    vm_ids: Optional[tuple[int, ...]] = None

    def __post_init__(self):
        if isinstance(self.job_id, bool) or not isinstance(self.job_id, int) \
                or self.job_id < 0:
            raise ValidationError(f"job_id must be an integer >= 0, "
                                  f"got {self.job_id!r}")
        if not self.job_type or not isinstance(self.job_type, str):
            raise ValidationError("job_type must be a non-empty string")
        for name in ("length", "data_size", "reduce_ratio"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)) \
                    or value <= 0:
                raise ValidationError(f"job {name} must be > 0, got {value!r}")
        for name in ("nm", "nr"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) \
                    or value < 1:
                raise ValidationError(f"job {name} must be an integer >= 1, "
                                      f"got {value!r}")
        if self.vm_ids is not None:
            if not isinstance(self.vm_ids, tuple) or not self.vm_ids or \
                    any(isinstance(v, bool) or not isinstance(v, int) or v < 0
                        for v in self.vm_ids):
                raise ValidationError("vm_ids must be a non-empty tuple of "
                                      "VM ids")
            if len(set(self.vm_ids)) != len(self.vm_ids):
                raise ValidationError("vm_ids must not repeat")

    @property
    def mr_combination(self) -> str:
        return f"M{self.nm}R{self.nr}"


@dataclass
class Task:
    """Mutable per-task lifecycle record, owned by the job tracker."""

    kind: ClassVar[TaskKind]

    task_id: int
    job_id: int
    length: float
    input_share: float
    status: TaskStatus = TaskStatus.PENDING
    vm_id: Optional[int] = None
    start_time: Optional[float] = None
    finish_time: Optional[float] = None

    @property
    def exec_time(self) -> float:
        if self.start_time is None or self.finish_time is None:
            raise ValidationError(
                f"task {self.job_id}/{self.task_id} has not finished")
        return self.finish_time - self.start_time


@dataclass
class MapTask(Task):
    kind: ClassVar[TaskKind] = TaskKind.MAP


@dataclass
class ReduceTask(Task):
    kind: ClassVar[TaskKind] = TaskKind.REDUCE


def split_job(job: JobSpec) -> tuple[list[MapTask], list[ReduceTask]]:
    """Cut a job into its map and reduce tasks.

    Maps get task ids 0..nm-1 and reduces nm..nm+nr-1, so the highest id of
    each kind is the last-split task.  Work sums are exact: the last task
    of each kind absorbs the float remainder.
    """
    per_map = job.length / job.nm
    map_lengths = [per_map] * (job.nm - 1)
    map_lengths.append(job.length - per_map * (job.nm - 1))
    reduce_total = job.reduce_ratio * job.length / job.nm
    per_reduce = reduce_total / job.nr
    reduce_lengths = [per_reduce] * (job.nr - 1)
    reduce_lengths.append(reduce_total - per_reduce * (job.nr - 1))
    share = job.data_size / (job.nm + job.nr)
    maps = [MapTask(i, job.job_id, length, share)
            for i, length in enumerate(map_lengths)]
    reduces = [ReduceTask(job.nm + i, job.job_id, length, share)
               for i, length in enumerate(reduce_lengths)]
    return maps, reduces


def place_tasks(tasks: Sequence[Task], vms: Sequence[VmInstance]) -> dict:
    """Round-robin tasks over the VM list, starting from the first VM.

    Sets each task's ``vm_id`` and returns {task_id: vm_id}.
    """
    if not vms:
        raise SchedulingError("cannot place tasks on an empty VM list")
    assignment = {}
    for i, task in enumerate(tasks):
        vm = vms[i % len(vms)]
        task.vm_id = vm.id
        assignment[task.task_id] = vm.id
    return assignment


# -- event payloads ---------------------------------------------------------


@dataclass(frozen=True)
class CatalogSummary:
    """VM ids and rates as the broker believes them; the task tracker
    acknowledges only if they match its own view."""

    vms: tuple[tuple[int, float], ...]


@dataclass(frozen=True)
class PhaseStart:
    job_id: int
    phase: int


@dataclass(frozen=True)
class TaskDispatch:
    job_id: int
    task_id: int
    kind: TaskKind
    vm_id: int
    length: float
    reply_to: int


@dataclass(frozen=True)
class TaskDone:
    job_id: int
    task_id: int
    kind: TaskKind
    vm_id: int
    start_time: float
    finish_time: float


@dataclass(frozen=True)
class VmTick:
    """Self-addressed wake-up at a VM's next completion boundary."""

    vm_id: int
    version: int


def _stamp_done(task: Task, done: TaskDone) -> None:
    if task.status is TaskStatus.DONE:
        raise ProtocolError(f"duplicate completion for task "
                            f"{done.job_id}/{done.task_id}")
    task.status = TaskStatus.DONE
    task.start_time = done.start_time
    task.finish_time = done.finish_time


# -- entities ---------------------------------------------------------------


@dataclass
class _JobSequence:
    lists: list[Sequence[Task]]
    delays: list[float]
    reply_to: int
    by_id: dict
    next_phase: int = 0
    outstanding: int = 0


class SequentialBroker(SimEntity):
    """Submits jobs and releases their task lists one list at a time."""

    def __init__(self, name: str, jobs: Sequence[JobSpec] = ()):
        super().__init__(name)
        self.jobs = list(jobs)
        if len({j.job_id for j in self.jobs}) != len(self.jobs):
            raise ValidationError("job ids must be unique within a run")
        self.jobtracker_id: Optional[int] = None
        self.tasktracker_id: Optional[int] = None
        self.catalog: Optional[CatalogSummary] = None
        self.finished_jobs: list[int] = []
        self._sequences: dict[int, _JobSequence] = {}

    def startup(self) -> None:
        if self.tasktracker_id is None or self.jobtracker_id is None:
            raise ProtocolError(f"broker '{self.name}' started unwired")
        self.send_now(self.tasktracker_id, EventTag.CHARACTERISTIC_SETTING,
                      self.catalog)

    def process(self, event: SimEvent) -> None:
        tag = event.tag
        if tag is EventTag.ACKNOWLEDGE:
            for job in self.jobs:
                self.send_now(self.jobtracker_id, EventTag.JOB_SUBMIT, job)
        elif tag in (EventTag.DATA_FETCH_COMPLETE, EventTag.SHUFFLE_COMPLETE):
            self._dispatch_phase(event.payload)
        elif tag is EventTag.TASK_COMPLETE:
            # Only seen when the broker itself is the reply target, i.e.
            # sequencing bare task lists with no job tracker in the loop.
            done = event.payload
            seq = self._require_sequence(done.job_id)
            _stamp_done(seq.by_id[(done.job_id, done.task_id)], done)
            self.task_done(done.job_id)
        elif tag is EventTag.JOB_COMPLETE:
            self.finished_jobs.append(event.payload)
        else:
            raise ProtocolError(f"broker cannot handle {tag.value}")

    # The sequencing core: callable directly (tests, job tracker) or via
    # the JOB_SUBMIT path.

    def submit_sequential(self, job_id: int, task_lists, lead_delays=None,
                          reply_to: Optional[int] = None) -> None:
        if job_id in self._sequences:
            raise ProtocolError(f"job {job_id} already sequenced")
        lists = [list(lst) for lst in task_lists]
        if lead_delays is None:
            lead_delays = [0.0] * len(lists)
        lead_delays = [float(d) for d in lead_delays]
        if len(lead_delays) != len(lists):
            raise ValidationError("one lead delay per task list required")
        kept, kept_delays = [], []
        for i, lst in enumerate(lists):
            if not lst:
                log.warning("job %s: skipping empty task list %d", job_id, i)
                continue
            kept.append(lst)
            kept_delays.append(lead_delays[i])
        if not kept:
            log.warning("job %s: nothing to run", job_id)
            return
        by_id = {(t.job_id, t.task_id): t for lst in kept for t in lst}
        self._sequences[job_id] = _JobSequence(
            kept, kept_delays,
            self.entity_id if reply_to is None else reply_to, by_id)
        self._start_phase(job_id)

    def task_done(self, job_id: int) -> None:
        seq = self._require_sequence(job_id)
        if seq.outstanding <= 0:
            raise ProtocolError(f"job {job_id}: completion with no "
                                f"outstanding tasks")
        seq.outstanding -= 1
        if seq.outstanding:
            return
        seq.next_phase += 1
        if seq.next_phase < len(seq.lists):
            self._start_phase(job_id)
        elif seq.reply_to == self.entity_id:
            self.finished_jobs.append(job_id)

    def _require_sequence(self, job_id: int) -> _JobSequence:
        try:
            return self._sequences[job_id]
        except KeyError:
            raise ProtocolError(f"job {job_id} was never sequenced") from None

    def _start_phase(self, job_id: int) -> None:
        seq = self._sequences[job_id]
        phase = seq.next_phase
        for task in seq.lists[phase]:
            task.status = TaskStatus.FETCHING
        # Lead-in 0 still goes through the event queue so the trace shape
        # is identical in both delay modes.
        tag = (EventTag.DATA_FETCH_COMPLETE if phase == 0
               else EventTag.SHUFFLE_COMPLETE)
        self.send(self.entity_id, seq.delays[phase], tag,
                  PhaseStart(job_id, phase))

    def _dispatch_phase(self, start: PhaseStart) -> None:
        seq = self._require_sequence(start.job_id)
        if start.phase != seq.next_phase:
            raise InternalError(f"job {start.job_id}: phase {start.phase} "
                                f"fired while at {seq.next_phase}")
        tasks = seq.lists[start.phase]
        now = self.engine.peek_clock()
        seq.outstanding = len(tasks)
        for task in tasks:
            if task.vm_id is None:
                raise SchedulingError(
                    f"task {task.job_id}/{task.task_id} dispatched "
                    f"without a VM assignment")
            task.status = TaskStatus.RUNNING
            task.start_time = now
            self.send_now(self.tasktracker_id, EventTag.TASK_SUBMIT,
                          TaskDispatch(task.job_id, task.task_id, task.kind,
                                       task.vm_id, task.length, seq.reply_to))


class JobTracker(SimEntity):
    """Splits jobs, owns task records, and accounts completions."""

    def __init__(self, name: str, delay_model: DelayModel,
                 vms: Sequence[VmInstance]):
        super().__init__(name)
        self.delay_model = delay_model
        self.vms = list(vms)
        self.broker: Optional[SequentialBroker] = None
        self.jobs: dict[int, JobSpec] = {}
        self.tasks: dict[int, dict[int, Task]] = {}
        self.progress: dict[int, JobProgress] = {}
        self.submitted_at: dict[int, float] = {}

    def process(self, event: SimEvent) -> None:
        if event.tag is EventTag.JOB_SUBMIT:
            self._accept_job(event.payload)
        elif event.tag is EventTag.TASK_COMPLETE:
            self._record_completion(event.payload)
        else:
            raise ProtocolError(f"job tracker cannot handle "
                                f"{event.tag.value}")

    def _accept_job(self, job: JobSpec) -> None:
        if job.job_id in self.jobs:
            raise ProtocolError(f"job {job.job_id} submitted twice")
        if self.broker is None:
            raise ProtocolError(f"job tracker '{self.name}' has no broker")
        maps, reduces = split_job(job)
        vms = self._vms_for(job)
        place_tasks(maps, vms)
        place_tasks(reduces, vms)
        self.jobs[job.job_id] = job
        self.tasks[job.job_id] = {t.task_id: t for t in maps + reduces}
        self.progress[job.job_id] = JobProgress(nm=job.nm, nr=job.nr)
        self.submitted_at[job.job_id] = self.engine.peek_clock()
        self.broker.submit_sequential(
            job.job_id, [maps, reduces],
            lead_delays=[fetch_delay(job, self.delay_model),
                         shuffle_delay(job, self.delay_model)],
            reply_to=self.entity_id)

    def _vms_for(self, job: JobSpec) -> list[VmInstance]:
        if job.vm_ids is None:
            return self.vms
        by_id = {vm.id: vm for vm in self.vms}
        missing = [v for v in job.vm_ids if v not in by_id]
        if missing:
            raise SchedulingError(
                f"job {job.job_id} pinned to unknown VM ids {missing}")
        return [by_id[v] for v in job.vm_ids]

    def _record_completion(self, done: TaskDone) -> None:
        try:
            task = self.tasks[done.job_id][done.task_id]
        except KeyError:
            raise ProtocolError(
                f"completion for unknown task "
                f"{done.job_id}/{done.task_id}") from None
        _stamp_done(task, done)
        progress = self.progress[done.job_id]
        if done.kind is TaskKind.MAP:
            self.on_map_complete(done.job_id, done.task_id)
        else:
            progress.reduces_done += 1
            if progress.reduces_done > progress.nr:
                raise ProtocolError(f"job {done.job_id}: more reduce "
                                    f"completions than reduces")
        # Nudge the sequencer; on the last map this launches the shuffle
        # and the reduce list.
        self.broker.task_done(done.job_id)
        if done.kind is TaskKind.REDUCE and \
                progress.reduces_done == progress.nr:
            self.send_now(self.broker.entity_id, EventTag.JOB_COMPLETE,
                          done.job_id)

    def on_map_complete(self, job_id: int, task_id: int) -> bool:
        """Count one map completion; True when the job's map phase is done."""
        progress = self.progress[job_id]
        progress.maps_done += 1
        if progress.maps_done > progress.nm:
            raise ProtocolError(f"job {job_id}: more map completions than "
                                f"maps")
        return progress.maps_done == progress.nm

    def records_for(self, job_id: int) -> list[Task]:
        if job_id not in self.tasks:
            raise ValidationError(f"no records for job {job_id}")
        return sorted(self.tasks[job_id].values(), key=lambda t: t.task_id)


@dataclass
class JobProgress:
    nm: int
    nr: int
    maps_done: int = 0
    reduces_done: int = 0


class TaskTracker(SimEntity):
    """Executes dispatched tasks on the provisioned VMs.

    Each VM's run queue advances lazily: the tracker remembers when a VM
    was last synchronized and, on any event touching it, applies the
    elapsed processor-shared progress before changing the queue.  A
    version counter per VM invalidates boundary wake-ups that a newer
    queue change has obsoleted.
    """

    def __init__(self, name: str, vms: Sequence[VmInstance]):
        super().__init__(name)
        self.vms = {vm.id: vm for vm in vms}
        self._synced_at = {vm.id: 0.0 for vm in vms}
        self._versions = {vm.id: 0 for vm in vms}
        self._dispatches: dict[tuple[int, int], TaskDispatch] = {}
        self._starts: dict[tuple[int, int], float] = {}
        self.status_log: list[str] = []

    def process(self, event: SimEvent) -> None:
        if event.tag is EventTag.CHARACTERISTIC_SETTING:
            self._accept_characteristics(event)
        elif event.tag is EventTag.TASK_SUBMIT:
            self._accept_task(event.payload)
        elif event.tag is EventTag.TASK_COMPLETE:
            self._on_tick(event.payload)
        else:
            raise ProtocolError(f"task tracker cannot handle "
                                f"{event.tag.value}")

    def _accept_characteristics(self, event: SimEvent) -> None:
        summary = event.payload
        mine = tuple((vm.id, vm.rate) for vm in self.vms.values())
        if not isinstance(summary, CatalogSummary) or summary.vms != mine:
            raise ProtocolError(
                f"characteristics mismatch: broker sent {summary!r}, "
                f"tracker hosts {mine!r}")
        self.send_now(event.source, EventTag.ACKNOWLEDGE, summary)

    def _accept_task(self, dispatch: TaskDispatch) -> None:
        vm = self.vms.get(dispatch.vm_id)
        if vm is None:
            raise SchedulingError(f"dispatch to unknown VM {dispatch.vm_id}")
        now = self.engine.peek_clock()
        self._sync(vm, now)
        key = (dispatch.job_id, dispatch.task_id)
        vm.assign_task(key, dispatch.length)
        self._dispatches[key] = dispatch
        self._starts[key] = now
        self.status_log.append(
            f"{now:.6f} start {dispatch.kind.value} "
            f"{dispatch.job_id}/{dispatch.task_id} vm={vm.id}")
        self._rearm(vm, now)

    def _on_tick(self, tick: VmTick) -> None:
        if not isinstance(tick, VmTick):
            raise ProtocolError("task tracker got a completion event that "
                                "is not a VM wake-up")
        if tick.version != self._versions[tick.vm_id]:
            return  # a queue change superseded this wake-up
        vm = self.vms[tick.vm_id]
        now = self.engine.peek_clock()
        self._sync(vm, now)
        self._rearm(vm, now)

    def _sync(self, vm: VmInstance, now: float) -> None:
        dt = now - self._synced_at[vm.id]
        if dt < 0:
            raise InternalError(f"VM {vm.id} synced into the past")
        self._synced_at[vm.id] = now
        for key in vm.advance(dt):
            self._finish(key, vm, now)

    def _rearm(self, vm: VmInstance, now: float) -> None:
        self._versions[vm.id] += 1
        dt = vm.next_completion()
        if dt is not None:
            self.send(self.entity_id, dt, EventTag.TASK_COMPLETE,
                      VmTick(vm.id, self._versions[vm.id]))

    def _finish(self, key, vm: VmInstance, now: float) -> None:
        dispatch = self._dispatches.pop(key)
        start = self._starts.pop(key)
        self.status_log.append(
            f"{now:.6f} finish {dispatch.kind.value} "
            f"{dispatch.job_id}/{dispatch.task_id} vm={vm.id}")
        self.send_now(dispatch.reply_to, EventTag.TASK_COMPLETE,
                      TaskDone(dispatch.job_id, dispatch.task_id,
                               dispatch.kind, vm.id, start, now))
