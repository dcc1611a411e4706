import dataclasses
import logging
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cloudmr.cloud import Datacenter, SMALL_VM, VmInstance
from cloudmr.delays import DelayModel
from cloudmr.errors import ProtocolError, SchedulingError, ValidationError
from cloudmr.kernel import Engine, EventTag, SimEntity
from cloudmr.mapreduce import (
    CatalogSummary,
    JobProgress,
    JobSpec,
    JobTracker,
    MapTask,
    ReduceTask,
    SequentialBroker,
    TaskDispatch,
    TaskDone,
    TaskKind,
    TaskStatus,
    TaskTracker,
    parse_mr,
    place_tasks,
    split_job,
)


def small_job(nm=1, nr=1, job_id=0, **kwargs):
    return JobSpec(job_id=job_id, job_type="Small", length=362_880.0,
                   data_size=200_000.0, nm=nm, nr=nr, **kwargs)


def build_sim(jobs, vm_count=3, spec=SMALL_VM, delay=None, trace=False):
    """Wire the full broker / job tracker / task tracker trio."""
    vms = Datacenter().provision(spec, vm_count)
    engine = Engine(trace=trace)
    broker = SequentialBroker("broker", jobs)
    jobtracker = JobTracker("job-tracker", delay or DelayModel(), vms)
    tasktracker = TaskTracker("task-tracker", vms)
    for entity in (broker, jobtracker, tasktracker):
        engine.register(entity)
    broker.jobtracker_id = jobtracker.entity_id
    broker.tasktracker_id = tasktracker.entity_id
    broker.catalog = CatalogSummary(tuple((vm.id, vm.rate) for vm in vms))
    jobtracker.broker = broker
    return engine, broker, jobtracker, tasktracker, vms


# -- splitting and placement --------------------------------------------------


def test_split_small_job_one_to_one():
    maps, reduces = split_job(small_job())
    assert len(maps) == 1 and len(reduces) == 1
    assert maps[0].length == 362_880.0
    assert reduces[0].length == 362_880.0
    assert maps[0].input_share == reduces[0].input_share == 100_000.0


def test_split_shares_work_and_ids():
    maps, reduces = split_job(JobSpec(1, "custom", 1000.0, 600.0, 4, 2))
    assert [m.length for m in maps] == [250.0] * 4
    assert [r.length for r in reduces] == [125.0, 125.0]
    assert [t.task_id for t in maps] == [0, 1, 2, 3]
    assert [t.task_id for t in reduces] == [4, 5]
    assert all(t.input_share == 100.0 for t in maps + reduces)
    assert all(t.status is TaskStatus.PENDING for t in maps + reduces)


def test_split_remainder_goes_to_the_last_task():
    maps, _ = split_job(JobSpec(1, "custom", 10.0, 6.0, 3, 1))
    per = 10.0 / 3
    assert maps[0].length == per and maps[1].length == per
    assert maps[2].length == 10.0 - 2 * per
    assert sum(m.length for m in maps) == 10.0


@given(st.integers(1, 40), st.integers(1, 8),
       st.floats(min_value=1.0, max_value=1e7),
       st.floats(min_value=0.05, max_value=2.0))
def test_split_conserves_work_exactly(nm, nr, length, ratio):
    job = JobSpec(0, "custom", length, 1.0, nm, nr, reduce_ratio=ratio)
    maps, reduces = split_job(job)
    # fsum is the correctly rounded exact sum; the remainder fold is then
    # conserving up to the two roundings it performs (a few ulps).
    reduce_total = ratio * length / nm
    assert abs(math.fsum(m.length for m in maps) - length) \
        <= 1e-12 * length
    assert abs(math.fsum(r.length for r in reduces) - reduce_total) \
        <= 1e-12 * reduce_total
    assert len(maps) == nm and len(reduces) == nr
    assert all(t.length > 0 for t in maps + reduces)


def test_round_robin_placement_restarts_per_call():
    vms = [VmInstance(i, SMALL_VM, 250.0) for i in range(3)]
    maps, reduces = split_job(JobSpec(0, "custom", 100.0, 10.0, 5, 2))
    assignment = place_tasks(maps, vms)
    assert [assignment[i] for i in range(5)] == [0, 1, 2, 0, 1]
    second = place_tasks(reduces, vms)
    assert [second[i] for i in (5, 6)] == [0, 1]
    assert all(m.vm_id is not None for m in maps)


def test_placement_needs_vms():
    maps, _ = split_job(small_job())
    with pytest.raises(SchedulingError):
        place_tasks(maps, [])


def test_parse_mr():
    assert parse_mr("M4R2") == (4, 2)
    assert parse_mr("M20R1") == (20, 1)
    for bad in ("M0R1", "M1R0", "4x2", "MR", "M1", "", 42):
        with pytest.raises(ValidationError):
            parse_mr(bad)


def test_jobspec_validation():
    with pytest.raises(ValidationError):
        small_job(nm=0)
    with pytest.raises(ValidationError):
        small_job(nr=0)
    with pytest.raises(ValidationError):
        JobSpec(0, "Small", -1.0, 1.0, 1, 1)
    with pytest.raises(ValidationError):
        small_job(reduce_ratio=0.0)
    with pytest.raises(ValidationError):
        small_job(vm_ids=(1, 1))
    with pytest.raises(ValidationError):
        small_job(vm_ids=())
    assert small_job(nm=4, nr=2).mr_combination == "M4R2"


# -- full choreography --------------------------------------------------------

M2R1_TAG_SEQUENCE = [
    "entity-creation", "entity-creation", "entity-creation",
    "characteristic-setting", "acknowledge", "job-submit",
    "data-fetch-complete", "task-submit", "task-submit",
    "task-complete", "task-complete",     # VM wake-ups
    "task-complete", "task-complete",     # reports to the job tracker
    "shuffle-complete", "task-submit",
    "task-complete", "task-complete",
    "job-complete",
    "termination", "termination", "termination",
]


def test_m2r1_event_choreography_is_frozen():
    engine, broker, *_ = build_sim([small_job(nm=2)], vm_count=2,
                                   trace=True)
    engine.run()
    tags = [line.split(",")[-1] for line in engine.trace_lines]
    assert tags == M2R1_TAG_SEQUENCE
    assert broker.finished_jobs == [0]


def test_single_job_records_and_times():
    engine, broker, jobtracker, _, _ = build_sim([small_job()])
    end = engine.run()
    records = jobtracker.records_for(0)
    assert [r.kind for r in records] == [TaskKind.MAP, TaskKind.REDUCE]
    assert all(r.status is TaskStatus.DONE for r in records)
    assert records[0].start_time == 0.0
    assert records[0].finish_time == 1451.52
    assert records[1].start_time == 1451.52
    assert records[1].finish_time == 2903.04
    assert end == 2903.04


def test_reduce_waits_for_every_map():
    engine, _, jobtracker, _, _ = build_sim([small_job(nm=3)], vm_count=1)
    engine.run()
    records = jobtracker.records_for(0)
    maps = [r for r in records if r.kind is TaskKind.MAP]
    reduces = [r for r in records if r.kind is TaskKind.REDUCE]
    assert reduces[0].start_time == max(m.finish_time for m in maps)


def test_vm_pinning_restricts_placement():
    engine, _, jobtracker, _, _ = build_sim([small_job(nm=4, vm_ids=(1,))])
    engine.run()
    assert {r.vm_id for r in jobtracker.records_for(0)} == {1}


def test_two_jobs_share_a_vm_fairly():
    jobs = [small_job(job_id=0, vm_ids=(0,)), small_job(job_id=1,
                                                        vm_ids=(0,))]
    engine, broker, jobtracker, _, _ = build_sim(jobs)
    engine.run()
    # Both maps run together at half rate, then both reduces do.
    for job_id in (0, 1):
        records = jobtracker.records_for(job_id)
        assert records[0].finish_time == 2903.04
        assert records[1].finish_time == 2903.04 + 2903.04
    assert sorted(broker.finished_jobs) == [0, 1]


def test_disjoint_vm_sets_isolate_jobs():
    solo_engine, _, solo_tracker, _, _ = build_sim([small_job(nm=2)],
                                                   vm_count=2)
    solo_engine.run()
    solo = [(r.start_time, r.finish_time)
            for r in solo_tracker.records_for(0)]

    jobs = [small_job(job_id=0, nm=2, vm_ids=(0, 1)),
            small_job(job_id=1, nm=2, vm_ids=(2, 3))]
    engine, _, jobtracker, _, _ = build_sim(jobs, vm_count=4)
    engine.run()
    for job_id in (0, 1):
        assert [(r.start_time, r.finish_time)
                for r in jobtracker.records_for(job_id)] == solo


def test_pinning_to_unknown_vm_fails():
    engine, *_ = build_sim([small_job(vm_ids=(7,))])
    with pytest.raises(SchedulingError):
        engine.run()


def test_characteristics_mismatch_is_rejected():
    engine, broker, *_ = build_sim([small_job()])
    broker.catalog = CatalogSummary(((0, 250.0), (1, 250.0)))  # one short
    with pytest.raises(ProtocolError):
        engine.run()


def test_unwired_broker_refuses_to_start():
    engine = Engine()
    engine.register(SequentialBroker("broker", [small_job()]))
    with pytest.raises(ProtocolError):
        engine.run()


def test_duplicate_job_ids_rejected_up_front():
    with pytest.raises(ValidationError):
        SequentialBroker("broker", [small_job(), small_job()])


# -- broker sequencing without a job tracker ----------------------------------


class _BareTracker:
    """Minimal stand-in wiring for direct submit_sequential tests."""

    @staticmethod
    def build(task_lists, vm_count=2):
        vms = Datacenter().provision(SMALL_VM, vm_count)
        engine = Engine()
        broker = SequentialBroker("broker", [])
        tasktracker = TaskTracker("task-tracker", vms)
        engine.register(broker)
        engine.register(tasktracker)
        broker.jobtracker_id = broker.entity_id  # unused but wired
        broker.tasktracker_id = tasktracker.entity_id
        broker.catalog = CatalogSummary(tuple((vm.id, vm.rate)
                                              for vm in vms))
        for lst in task_lists:
            place_tasks(lst, vms)
        return engine, broker


def test_submit_sequential_enforces_the_list_order():
    maps, reduces = split_job(JobSpec(7, "custom", 1000.0, 10.0, 2, 1))
    engine, broker = _BareTracker.build([maps, reduces])
    broker.submit_sequential(7, [maps, reduces])
    engine.run()
    assert reduces[0].start_time == max(m.finish_time for m in maps)
    assert broker.finished_jobs == [7]
    assert all(t.status is TaskStatus.DONE for t in maps + reduces)


def test_single_list_behaves_as_plain_submission():
    maps, _ = split_job(JobSpec(3, "custom", 500.0, 10.0, 2, 1))
    engine, broker = _BareTracker.build([maps])
    broker.submit_sequential(3, [maps])
    engine.run()
    assert broker.finished_jobs == [3]
    assert all(m.status is TaskStatus.DONE for m in maps)


def test_empty_lists_are_skipped_with_a_warning(caplog):
    maps, _ = split_job(JobSpec(4, "custom", 500.0, 10.0, 2, 1))
    engine, broker = _BareTracker.build([maps])
    with caplog.at_level(logging.WARNING):
        broker.submit_sequential(4, [[], maps])
    assert "empty task list" in caplog.text
    engine.run()
    assert broker.finished_jobs == [4]


def test_lead_delays_postpone_each_phase():
    maps, reduces = split_job(JobSpec(9, "custom", 1000.0, 10.0, 1, 1))
    engine, broker = _BareTracker.build([maps, reduces])
    broker.submit_sequential(9, [maps, reduces], lead_delays=[5.0, 2.5])
    engine.run()
    assert maps[0].start_time == 5.0
    assert reduces[0].start_time == maps[0].finish_time + 2.5


def test_resequencing_a_job_is_refused():
    maps, _ = split_job(JobSpec(5, "custom", 500.0, 10.0, 1, 1))
    engine, broker = _BareTracker.build([maps])
    broker.submit_sequential(5, [maps])
    with pytest.raises(ProtocolError):
        broker.submit_sequential(5, [maps])
    with pytest.raises(ValidationError):
        broker.submit_sequential(6, [maps], lead_delays=[1.0, 2.0])


def test_unsolicited_completion_is_a_protocol_error():
    maps, _ = split_job(JobSpec(5, "custom", 500.0, 10.0, 1, 1))
    engine, broker = _BareTracker.build([maps])
    broker.submit_sequential(5, [maps])
    with pytest.raises(ProtocolError):
        broker.task_done(5)            # nothing dispatched yet
    with pytest.raises(ProtocolError):
        broker.task_done(12345)        # never sequenced


# -- job tracker accounting ---------------------------------------------------


def test_on_map_complete_counts_to_the_barrier():
    tracker = JobTracker("jt", DelayModel(), [])
    tracker.progress[5] = JobProgress(nm=2, nr=1)
    assert tracker.on_map_complete(5, 0) is False
    assert tracker.on_map_complete(5, 1) is True
    with pytest.raises(ProtocolError):
        tracker.on_map_complete(5, 2)


def test_duplicate_completion_is_rejected():
    engine, _, jobtracker, _, _ = build_sim([small_job()])
    engine.run()
    done = TaskDone(0, 0, TaskKind.MAP, 0, 0.0, 1451.52)
    with pytest.raises(ProtocolError):
        jobtracker._record_completion(done)


def test_completion_for_unknown_task_is_rejected():
    engine, _, jobtracker, _, _ = build_sim([small_job()])
    engine.run()
    with pytest.raises(ProtocolError):
        jobtracker._record_completion(
            TaskDone(99, 0, TaskKind.MAP, 0, 0.0, 1.0))


# -- task tracker timing ------------------------------------------------------


class DispatchDriver(SimEntity):
    """Feeds dispatches to a task tracker on a schedule, collects reports."""

    def __init__(self, name, plan, tracker_id):
        super().__init__(name)
        self.plan = plan
        self.tracker_id = tracker_id
        self.done = []

    def startup(self):
        for delay, dispatch in self.plan:
            self.send(self.tracker_id, delay, EventTag.TASK_SUBMIT,
                      dataclasses.replace(dispatch,
                                          reply_to=self.entity_id))

    def process(self, event):
        assert event.tag is EventTag.TASK_COMPLETE
        self.done.append(event.payload)


def test_late_arrival_reshapes_completion_times():
    # 100 MI at 10 MI/s: alone for 5 s (50 MI), then sharing.  The first
    # task's original wake-up at t=10 must be discarded as stale.
    vm = VmInstance(0, SMALL_VM, rate=10.0)
    engine = Engine()
    tracker = TaskTracker("task-tracker", [vm])
    tracker_id = engine.register(tracker)
    plan = [
        (0.0, TaskDispatch(0, 0, TaskKind.MAP, 0, 100.0, reply_to=-1)),
        (5.0, TaskDispatch(0, 1, TaskKind.MAP, 0, 100.0, reply_to=-1)),
    ]
    driver = DispatchDriver("driver", plan, tracker_id)
    engine.register(driver)
    engine.run()
    finishes = {d.task_id: d.finish_time for d in driver.done}
    assert finishes == {0: 15.0, 1: 20.0}
    starts = {d.task_id: d.start_time for d in driver.done}
    assert starts == {0: 0.0, 1: 5.0}


def test_dispatch_to_unknown_vm_fails():
    vm = VmInstance(0, SMALL_VM, rate=10.0)
    engine = Engine()
    tracker = TaskTracker("task-tracker", [vm])
    tracker_id = engine.register(tracker)
    plan = [(0.0, TaskDispatch(0, 0, TaskKind.MAP, 5, 100.0, reply_to=-1))]
    engine.register(DispatchDriver("driver", plan, tracker_id))
    with pytest.raises(SchedulingError):
        engine.run()


def test_work_is_conserved_through_a_real_run():
    engine, _, _, tasktracker, vms = build_sim([small_job(nm=7, nr=2)])
    engine.run()
    total = sum(vm.mi_completed for vm in vms)
    # 362880 of map work plus a reduce phase of 362880/7.
    expected = 362_880.0 + 362_880.0 / 7
    assert total == pytest.approx(expected, rel=1e-9)
