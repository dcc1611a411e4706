"""Deterministic discrete-event kernel.

The engine owns a monotonic simulation clock and a future-event list.
Entities register with the engine, exchange timestamped events, and are
driven strictly in timestamp order; events with equal timestamps are
delivered in the order they were enqueued, so a given scenario replays
byte-identically however often it is run.  There is no wall-clock coupling
and no randomness anywhere in the kernel.

Lifecycle: ``run()`` first delivers one entity-creation event to every
registered entity (in registration order), then drains the queue, and once
nothing is left delivers one termination event per entity before returning
the final clock value.
"""

from __future__ import annotations

import heapq
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Optional

from .errors import (
    InternalError,
    ProtocolError,
    RegistrationError,
    ValidationError,
)

log = logging.getLogger(__name__)

# Reserved source id for events the engine itself injects.
KERNEL = 0

SimTime = float


class EventTag(Enum):
    """Discriminates every message kind the simulator exchanges."""

    ENTITY_CREATION = "entity-creation"
    ACKNOWLEDGE = "acknowledge"
    CHARACTERISTIC_SETTING = "characteristic-setting"
    JOB_SUBMIT = "job-submit"
    TASK_SUBMIT = "task-submit"
    TASK_COMPLETE = "task-complete"
    DATA_FETCH_COMPLETE = "data-fetch-complete"
    SHUFFLE_COMPLETE = "shuffle-complete"
    JOB_COMPLETE = "job-complete"
    TERMINATION = "termination"
    # Accepted for compatibility with richer cloud models; delivered to
    # nobody and logged as no-ops.
    PAUSE = "pause"
    MOVE = "move"
    MIGRATION = "migration"


#: Tags the engine swallows (with a debug log line) instead of delivering.
NOOP_TAGS = frozenset({EventTag.PAUSE, EventTag.MOVE, EventTag.MIGRATION})


@dataclass(frozen=True)
class SimEvent:
    """One scheduled message.  Immutable once enqueued."""

    time: SimTime
    sequence: int
    source: int
    destination: int
    tag: EventTag
    payload: Any = None


class EntityState(Enum):
    CREATED = "created"
    RUNNING = "running"
    FINISHED = "finished"


class SimEntity:
    """Base class for everything that can send and receive events.

    Subclasses implement ``process`` for ordinary events; ``startup`` and
    ``shutdown`` hook the entity-creation and termination deliveries.
    ``engine`` and ``entity_id`` are filled in by ``Engine.register``.
    """

    def __init__(self, name: str):
        if not name or not isinstance(name, str):
            raise ValidationError("entity name must be a non-empty string")
        self.name = name
        self.engine: Optional[Engine] = None
        self.entity_id: Optional[int] = None
        self.state = EntityState.CREATED

    def startup(self) -> None:
        pass

    def shutdown(self) -> None:
        pass

    def process(self, event: SimEvent) -> None:
        raise NotImplementedError

    def send(self, destination: int, delay: SimTime, tag: EventTag,
             payload: Any = None) -> SimEvent:
        return self.engine.schedule(destination, delay, tag, payload,
                                    source=self.entity_id)

    def send_now(self, destination: int, tag: EventTag,
                 payload: Any = None) -> SimEvent:
        """Schedule at the current clock; delivery order follows enqueue
        order among same-time events."""
        return self.send(destination, 0.0, tag, payload)


class Engine:
    """Future-event list plus the registry of live entities."""

    def __init__(self, *, trace: bool = False):
        self._clock: SimTime = 0.0
        self._queue: list[tuple[SimTime, int, SimEvent]] = []
        self._entities: dict[int, SimEntity] = {}
        self._next_id = KERNEL + 1
        self._next_seq = 0
        self._running = False
        self._finished = False
        self._terminating = False
        #: ``time,sequence,source,destination,tag`` per dispatched event,
        #: or None when tracing is off.
        self.trace_lines: Optional[list[str]] = [] if trace else None

    # -- registry ---------------------------------------------------------

    def register(self, entity: SimEntity) -> int:
        if self._finished:
            raise ProtocolError("cannot register entities on a drained engine")
        if not isinstance(entity, SimEntity):
            raise ValidationError("only SimEntity instances can register")
        if entity.engine is not None:
            raise ProtocolError(f"entity '{entity.name}' is already registered")
        if any(e.name == entity.name for e in self._entities.values()):
            raise ValidationError(f"duplicate entity name '{entity.name}'")
        entity_id = self._next_id
        self._next_id += 1
        entity.engine = self
        entity.entity_id = entity_id
        self._entities[entity_id] = entity
        # Creation is enqueued immediately so it precedes anything a caller
        # schedules for this entity afterwards.
        self._enqueue(self._clock, KERNEL, entity_id,
                      EventTag.ENTITY_CREATION, None)
        return entity_id

    def entity(self, entity_id: int) -> SimEntity:
        try:
            return self._entities[entity_id]
        except KeyError:
            raise RegistrationError(f"unknown entity id {entity_id}") from None

    def name_of(self, entity_id: int) -> str:
        if entity_id == KERNEL:
            return "kernel"
        return self.entity(entity_id).name

    # -- scheduling -------------------------------------------------------

    def schedule(self, destination: int, delay: SimTime, tag: EventTag,
                 payload: Any = None, *, source: int = KERNEL) -> SimEvent:
        if self._finished:
            raise ProtocolError("engine already terminated; cannot schedule")
        if not isinstance(tag, EventTag):
            raise ValidationError(f"tag must be an EventTag, got {tag!r}")
        if isinstance(delay, bool) or not isinstance(delay, (int, float)):
            raise ValidationError(f"delay must be a real number, got {delay!r}")
        delay = float(delay)
        if not math.isfinite(delay) or delay < 0.0:
            raise ValidationError(f"delay must be finite and >= 0, got {delay}")
        if destination not in self._entities:
            raise RegistrationError(
                f"cannot schedule {tag.value}: unknown destination id "
                f"{destination}")
        return self._enqueue(self._clock + delay, source, destination, tag,
                             payload)

    def _enqueue(self, time: SimTime, source: int, destination: int,
                 tag: EventTag, payload: Any) -> SimEvent:
        event = SimEvent(time, self._next_seq, source, destination, tag,
                         payload)
        self._next_seq += 1
        heapq.heappush(self._queue, (event.time, event.sequence, event))
        return event

    # -- execution --------------------------------------------------------

    def peek_clock(self) -> SimTime:
        return self._clock

    def run(self) -> SimTime:
        """Drain the event queue; returns the clock after the last delivery.

        With nothing scheduled beyond creation and termination the result
        is 0.0.
        """
        if self._finished:
            raise ProtocolError("engine already terminated; cannot re-run")
        if not self._entities:
            raise ValidationError("run() needs at least one registered entity")
        self._running = True
        while True:
            if not self._queue:
                if self._terminating:
                    break
                self._terminating = True
                for entity_id in self._entities:
                    self._enqueue(self._clock, KERNEL, entity_id,
                                  EventTag.TERMINATION, None)
                continue
            _, _, event = heapq.heappop(self._queue)
            if event.time < self._clock:
                raise InternalError(
                    f"clock would move backwards: {event.time} < {self._clock}")
            self._clock = event.time
            self._dispatch(event)
        self._running = False
        self._finished = True
        return self._clock

    def _dispatch(self, event: SimEvent) -> None:
        if self.trace_lines is not None:
            self.trace_lines.append(
                f"{event.time!r},{event.sequence},"
                f"{self.name_of(event.source)},"
                f"{self.name_of(event.destination)},{event.tag.value}")
        if not isinstance(event.tag, EventTag):
            raise InternalError(f"forged event tag {event.tag!r}")
        if event.tag in NOOP_TAGS:
            log.debug("ignoring %s event for entity %d at t=%s",
                      event.tag.value, event.destination, event.time)
            return
        entity = self._entities.get(event.destination)
        if entity is None:
            raise RegistrationError(
                f"event {event.tag.value} addressed to unknown id "
                f"{event.destination}")
        if event.tag is EventTag.ENTITY_CREATION:
            if entity.state is not EntityState.CREATED:
                raise ProtocolError(
                    f"duplicate creation for entity '{entity.name}'")
            entity.state = EntityState.RUNNING
            entity.startup()
        elif event.tag is EventTag.TERMINATION:
            if entity.state is not EntityState.RUNNING:
                raise ProtocolError(
                    f"termination for entity '{entity.name}' in state "
                    f"{entity.state.value}")
            entity.state = EntityState.FINISHED
            entity.shutdown()
        else:
            if entity.state is not EntityState.RUNNING:
                raise ProtocolError(
                    f"{event.tag.value} delivered to entity '{entity.name}' "
                    f"in state {entity.state.value}")
            entity.process(event)

    def trace_text(self) -> str:
        if self.trace_lines is None:
            raise ValidationError("tracing was not enabled on this engine")
        return "\n".join(self.trace_lines) + ("\n" if self.trace_lines else "")
