"""Datacenter capacity accounting and time-shared virtual machines.

A single datacenter hosts every VM in a run.  Provisioning checks each
resource dimension (processing elements, RAM, storage) against what is
left and rejects the whole request if any dimension would go negative;
granted VMs are never reclaimed.

A VM executes the tasks in its run queue under processor sharing: with k
resident tasks each receives rate/k of the VM's MI throughput.  Between
queue changes progress is linear, so callers advance a VM in slices that
end at the next completion boundary and stay numerically exact.

Two capacity policies are supported.  The default, ``shared-mips``, uses
the VM's per-core MIPS rating as the rate the resident tasks share; the
core count then matters for datacenter capacity only.  That matches
schedulers which pin one processing element per external request, where
doubling cores alongside MIPS does not shorten a single task.
``pes-aggregate`` instead pools all cores into rate = mips * pes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ProtocolError, ProvisioningError, ValidationError

#: A task whose remaining work falls below this many MI counts as done.
COMPLETION_EPS_MI = 1e-6

CAPACITY_MODELS = ("shared-mips", "pes-aggregate")
DEFAULT_CAPACITY_MODEL = "shared-mips"


def _positive(value, name, *, integer=False):
    kinds = (int,) if integer else (int, float)
    if isinstance(value, bool) or not isinstance(value, kinds):
        raise ValidationError(f"{name} must be a number, got {value!r}")
    if value <= 0:
        raise ValidationError(f"{name} must be > 0, got {value}")
    return value


@dataclass(frozen=True)
class DatacenterConfig:
    """Host pool totals; defaults mirror a mid-size commodity datacenter."""

    pes_total: int = 500
    ram_total: int = 20480          # MB
    storage_total: int = 1_000_000  # MB
    bandwidth: float = 1000.0       # MB/s
    mips_per_pe: float = 1000.0

    def __post_init__(self):
        _positive(self.pes_total, "datacenter.pes_total", integer=True)
        _positive(self.ram_total, "datacenter.ram_total", integer=True)
        _positive(self.storage_total, "datacenter.storage_total", integer=True)
        _positive(self.bandwidth, "datacenter.bandwidth")
        _positive(self.mips_per_pe, "datacenter.mips_per_pe")


@dataclass(frozen=True)
class VmSpec:
    name: str
    image_size: int     # MB
    ram: int            # MB
    mips: float         # per processing element
    bandwidth: float    # MB/s
    pes: int
    cost_per_sec: float

    def __post_init__(self):
        if not self.name or not isinstance(self.name, str):
            raise ValidationError("vm spec name must be a non-empty string")
        _positive(self.image_size, "vm.image_size", integer=True)
        _positive(self.ram, "vm.ram", integer=True)
        _positive(self.mips, "vm.mips")
        _positive(self.bandwidth, "vm.bandwidth")
        _positive(self.pes, "vm.pes", integer=True)
        _positive(self.cost_per_sec, "vm.cost_per_sec")


SMALL_VM = VmSpec("Small", image_size=10_000, ram=512, mips=250.0,
                  bandwidth=1000.0, pes=1, cost_per_sec=1.0)
MEDIUM_VM = VmSpec("Medium", image_size=20_000, ram=1024, mips=500.0,
                   bandwidth=1000.0, pes=2, cost_per_sec=2.0)
LARGE_VM = VmSpec("Large", image_size=40_000, ram=2048, mips=1000.0,
                  bandwidth=1000.0, pes=4, cost_per_sec=4.0)

VM_CATALOG = {spec.name: spec for spec in (SMALL_VM, MEDIUM_VM, LARGE_VM)}


class VmInstance:
    """One provisioned VM with a processor-shared run queue.

    The instance is clock-free: it tracks remaining work per task and the
    caller tells it how much time passed since the last update.  ``advance``
    returns the ids of tasks that finished during the slice, in the order
    they were assigned.
    """

    def __init__(self, vm_id: int, spec: VmSpec, rate: float):
        self.id = vm_id
        self.spec = spec
        self.rate = _positive(rate, "vm rate")
        self.run_queue: dict = {}   # task key -> remaining MI
        self.mi_completed = 0.0
        self.busy_time = 0.0

    def __repr__(self):
        return f"VmInstance(id={self.id}, spec={self.spec.name!r}, " \
               f"queued={len(self.run_queue)})"

    @property
    def task_count(self) -> int:
        return len(self.run_queue)

    def assign_task(self, task_key, length: float) -> None:
        _positive(length, "task length")
        if task_key in self.run_queue:
            raise ProtocolError(
                f"task {task_key!r} is already queued on VM {self.id}")
        self.run_queue[task_key] = float(length)

    def next_completion(self) -> float | None:
        """Seconds until the earliest resident task finishes, or None."""
        if not self.run_queue:
            return None
        return min(self.run_queue.values()) * len(self.run_queue) / self.rate

    def advance(self, dt: float) -> list:
        """Progress every resident task by dt seconds of shared service.

        Work below COMPLETION_EPS_MI is treated as finished.  Remaining
        work never goes negative; if dt overshoots a completion boundary
        the excess is dropped, so exact accounting requires slicing at
        boundaries (``next_completion``).
        """
        if isinstance(dt, bool) or not isinstance(dt, (int, float)) or dt < 0:
            raise ValidationError(f"advance dt must be >= 0, got {dt!r}")
        if not self.run_queue or dt == 0:
            return []
        share = self.rate * float(dt) / len(self.run_queue)
        done = []
        for key, remaining in self.run_queue.items():
            credited = min(share, remaining)
            self.mi_completed += credited
            left = remaining - share
            if left <= COMPLETION_EPS_MI:
                done.append(key)
            else:
                self.run_queue[key] = left
        for key in done:
            del self.run_queue[key]
        self.busy_time += float(dt)
        return done


class Datacenter:
    """Tracks remaining capacity and hands out VM instances."""

    def __init__(self, config: DatacenterConfig | None = None,
                 capacity_model: str = DEFAULT_CAPACITY_MODEL):
        self.config = config or DatacenterConfig()
        if capacity_model not in CAPACITY_MODELS:
            raise ValidationError(
                f"unknown capacity model {capacity_model!r}; "
                f"expected one of {', '.join(CAPACITY_MODELS)}")
        self.capacity_model = capacity_model
        self.vms: list[VmInstance] = []
        self._pes_used = 0
        self._ram_used = 0
        self._storage_used = 0

    def remaining(self) -> dict:
        c = self.config
        return {
            "pes": c.pes_total - self._pes_used,
            "ram": c.ram_total - self._ram_used,
            "storage": c.storage_total - self._storage_used,
        }

    def provision(self, spec: VmSpec, count: int) -> list[VmInstance]:
        """All-or-nothing allocation of ``count`` VMs of ``spec``."""
        if isinstance(count, bool) or not isinstance(count, int) or count < 1:
            raise ValidationError(f"vm count must be an integer >= 1, "
                                  f"got {count!r}")
        left = self.remaining()
        asks = {
            "pes": spec.pes * count,
            "ram": spec.ram * count,
            "storage": spec.image_size * count,
        }
        for dimension in ("pes", "ram", "storage"):
            if asks[dimension] > left[dimension]:
                raise ProvisioningError(
                    f"cannot provision {count} x {spec.name}: needs "
                    f"{asks[dimension]} {dimension} but only "
                    f"{left[dimension]} available", dimension=dimension)
        self._pes_used += asks["pes"]
        self._ram_used += asks["ram"]
        self._storage_used += asks["storage"]
        if self.capacity_model == "pes-aggregate":
            rate = spec.mips * spec.pes
        else:
            rate = spec.mips
        granted = [VmInstance(len(self.vms) + i, spec, rate)
                   for i in range(count)]
        self.vms.extend(granted)
        return granted
