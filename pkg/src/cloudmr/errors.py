"""Exception hierarchy shared across the simulator.

Every error carries a ``category`` used by the service and the CLI to map
failures onto HTTP status codes and process exit codes without string
matching: ``parse`` for bad input, ``provision`` for datacenter capacity
rejections, ``run`` for anything that goes wrong while a simulation is
executing, and ``io`` for filesystem trouble.
"""


class SimulationError(Exception):
    """Base class for all simulator errors."""

    category = "run"


class ValidationError(SimulationError):
    """A value handed to the simulator is out of range or the wrong shape."""

    category = "parse"


class ScenarioError(ValidationError):
    """A scenario document failed to parse; ``path`` points at the bad key."""

    def __init__(self, message, path=None):
        self.path = path
        if path:
            message = f"{path}: {message}"
        super().__init__(message)


class ProvisioningError(SimulationError):
    """The datacenter cannot host the requested VMs.

    ``dimension`` names the exhausted resource (pes, ram or storage) so
    callers can report which axis to shrink.
    """

    category = "provision"

    def __init__(self, message, dimension=None):
        self.dimension = dimension
        super().__init__(message)


class RegistrationError(SimulationError):
    """An event was aimed at an entity id the engine has never seen."""


class ProtocolError(SimulationError):
    """Entities interacted out of order (duplicate completion, message to a
    finished entity, re-running a drained engine, and similar)."""


class SchedulingError(SimulationError):
    """Task placement was asked to do something impossible, e.g. spread
    tasks over an empty VM list."""


class MetricError(SimulationError):
    """Metric computation over an unfit record set (wrong lifecycle state,
    empty phase)."""


class InternalError(SimulationError):
    """An internal invariant broke; the simulation result cannot be trusted."""
