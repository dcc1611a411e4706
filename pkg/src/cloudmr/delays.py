"""Storage and network delay model.

Two modes: ``no-delay`` treats all data movement as free, ``network-delay``
charges each job a fetch pause before its maps start (reading input splits
from shared storage) and a shuffle pause between the last map finishing and
the reduces starting (moving intermediate output).

Both pauses come from the same transfer model: the job's data is spread
over nm + nr splits and the per-split transfer rides the shared storage
bandwidth, so

    fetch = shuffle = data_size / ((nm + nr) * storage_bandwidth)

The billed network cost is proportional to the total stall,

    network_cost = (fetch + shuffle) * network_cost_per_unit

with the unit price expressed per second of stall in the run's abstract
currency.  The default price of 10.625 calibrates one second of stall for
the reference job catalog; tests pin it against a published cost table.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum

from .errors import ValidationError

log = logging.getLogger(__name__)

DEFAULT_STORAGE_BANDWIDTH = 1000.0   # MB/s
DEFAULT_NETWORK_COST_PER_UNIT = 10.625


class DelayMode(Enum):
    NO_DELAY = "no-delay"
    NETWORK_DELAY = "network-delay"

    @classmethod
    def parse(cls, token: str) -> "DelayMode":
        for mode in cls:
            if mode.value == token:
                return mode
        raise ValidationError(
            f"unknown delay mode {token!r}; expected "
            f"{' or '.join(m.value for m in cls)}")


@dataclass(frozen=True)
class DelayModel:
    mode: DelayMode = DelayMode.NO_DELAY
    storage_bandwidth: float = DEFAULT_STORAGE_BANDWIDTH
    network_cost_per_unit: float = DEFAULT_NETWORK_COST_PER_UNIT

    def __post_init__(self):
        if not isinstance(self.mode, DelayMode):
            raise ValidationError(f"mode must be a DelayMode, "
                                  f"got {self.mode!r}")
        for name in ("storage_bandwidth", "network_cost_per_unit"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)) \
                    or value <= 0:
                raise ValidationError(f"delay.{name} must be > 0, "
                                      f"got {value!r}")


@dataclass(frozen=True)
class DelayBreakdown:
    """Per-job stall components, all in seconds."""

    fetch: float
    shuffle: float

    @property
    def total(self) -> float:
        return self.fetch + self.shuffle


def fetch_delay(job, model: DelayModel) -> float:
    if model.mode is DelayMode.NO_DELAY:
        return 0.0
    return job.data_size / ((job.nm + job.nr) * model.storage_bandwidth)


def shuffle_delay(job, model: DelayModel) -> float:
    # Intermediate output is modelled at the same volume as the input, so
    # the shuffle stall equals the fetch stall.
    return fetch_delay(job, model)


def breakdown(job, model: DelayModel) -> DelayBreakdown:
    return DelayBreakdown(fetch=fetch_delay(job, model),
                          shuffle=shuffle_delay(job, model))


def network_cost(job, model: DelayModel) -> float:
    """Billed cost of the job's data movement; 0 when delays are off."""
    if model.mode is DelayMode.NO_DELAY:
        log.warning("network cost requested in no-delay mode for job %s; "
                    "returning 0", getattr(job, "job_id", "?"))
        return 0.0
    return breakdown(job, model).total * model.network_cost_per_unit
