import pytest
from hypothesis import given
from hypothesis import strategies as st

from cloudmr.delays import DelayBreakdown
from cloudmr.errors import MetricError
from cloudmr.mapreduce import MapTask, TaskKind
from cloudmr.metrics import (
    TaskRecord,
    average_execution_time,
    delay_time,
    makespan,
    max_execution_time,
    min_execution_time,
    vm_computation_cost,
)


def rec(kind, start, finish, vm_id=0, task_id=0, job_id=0):
    return TaskRecord(job_id, task_id, kind, vm_id, start, finish)


def maps_and_reduce():
    return [
        rec(TaskKind.MAP, 0.0, 10.0, task_id=0),
        rec(TaskKind.MAP, 0.0, 20.0, task_id=1, vm_id=1),
        rec(TaskKind.REDUCE, 20.0, 25.0, task_id=2),
    ]


def test_execution_time_statistics_add_the_two_phases():
    records = maps_and_reduce()
    assert average_execution_time(records) == 15.0 + 5.0
    assert max_execution_time(records) == 20.0 + 5.0
    assert min_execution_time(records) == 10.0 + 5.0


def test_makespan_is_the_last_reduce_finish():
    records = maps_and_reduce()
    assert makespan(records) == 25.0
    records.append(rec(TaskKind.REDUCE, 20.0, 31.5, task_id=3))
    assert makespan(records) == 31.5


def test_delay_time_measures_the_two_stalls():
    records = [
        rec(TaskKind.MAP, 2.0, 12.0, task_id=0),
        rec(TaskKind.REDUCE, 15.0, 18.0, task_id=1),
    ]
    # started 2 late, reduce started 3 after the map finished: 5 stalled.
    assert delay_time(records) == 5.0
    assert delay_time(records, DelayBreakdown(2.0, 3.0)) == 5.0


def test_delay_time_is_exactly_zero_without_stalls():
    records = [
        rec(TaskKind.MAP, 0.0, 10.0, task_id=0),
        rec(TaskKind.REDUCE, 10.0, 14.0, task_id=1),
    ]
    assert delay_time(records) == 0.0


def test_delay_time_rejects_a_breakdown_mismatch():
    records = [
        rec(TaskKind.MAP, 2.0, 12.0, task_id=0),
        rec(TaskKind.REDUCE, 15.0, 18.0, task_id=1),
    ]
    with pytest.raises(MetricError):
        delay_time(records, DelayBreakdown(2.0, 4.0))


def test_vm_cost_bills_each_task_at_its_host_rate():
    records = maps_and_reduce()
    cost = vm_computation_cost(records, {0: 1.0, 1: 2.0})
    assert cost == 10.0 * 1.0 + 20.0 * 2.0 + 5.0 * 1.0
    with pytest.raises(MetricError):
        vm_computation_cost(records, {0: 1.0})


def test_metrics_need_both_phases():
    only_maps = [rec(TaskKind.MAP, 0.0, 1.0)]
    only_reduces = [rec(TaskKind.REDUCE, 0.0, 1.0)]
    for records in ([], only_maps, only_reduces):
        with pytest.raises(MetricError):
            average_execution_time(records)
        with pytest.raises(MetricError):
            makespan(records)


def test_negative_execution_is_rejected():
    records = [
        rec(TaskKind.MAP, 5.0, 1.0),
        rec(TaskKind.REDUCE, 5.0, 6.0, task_id=1),
    ]
    with pytest.raises(MetricError):
        average_execution_time(records)


def test_snapshot_requires_a_finished_task():
    task = MapTask(0, 0, 10.0, 1.0)
    with pytest.raises(MetricError):
        TaskRecord.from_task(task)
    task.vm_id, task.start_time, task.finish_time = 0, 1.0, 3.0
    snap = TaskRecord.from_task(task)
    assert (snap.kind, snap.exec_time) == (TaskKind.MAP, 2.0)


@st.composite
def record_sets(draw):
    def times(kind, count, task_ids):
        out = []
        for tid in task_ids:
            start = draw(st.floats(min_value=0.0, max_value=1e4))
            span = draw(st.floats(min_value=0.0, max_value=1e4))
            out.append(rec(kind, start, start + span, task_id=tid))
        return out
    nm = draw(st.integers(1, 6))
    nr = draw(st.integers(1, 4))
    return times(TaskKind.MAP, nm, range(nm)) + \
        times(TaskKind.REDUCE, nr, range(nm, nm + nr))


@given(record_sets())
def test_statistic_ordering_holds_for_any_record_set(records):
    low = min_execution_time(records)
    avg = average_execution_time(records)
    high = max_execution_time(records)
    slack = 1e-9 * max(1.0, abs(high))
    assert low <= avg + slack
    assert avg <= high + slack
