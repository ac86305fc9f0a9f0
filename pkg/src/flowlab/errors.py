"""Exception types shared across the laboratory."""

from __future__ import annotations


class FlowLabError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(FlowLabError):
    """A time or space argument fell outside the declared domain."""


class FieldEvaluationError(FlowLabError):
    """A field closure returned a non-finite or mis-shaped value.

    Carries the name of the offending component (``"b1"`` or ``"b2"``) so
    callers can tell which half of a split field misbehaved.
    """

    def __init__(self, component: str, message: str):
        self.component = component
        super().__init__(f"{component}: {message}")


class SampleError(FlowLabError):
    """Sampling a map onto a grid produced a non-finite value.

    ``node_index`` is the flat row-major index of the first bad node.
    """

    def __init__(self, node_index: int, coords, message: str = "non-finite sample"):
        self.node_index = int(node_index)
        self.coords = tuple(float(c) for c in coords)
        super().__init__(f"{message} at node {self.node_index} {self.coords}")


class DecompositionError(FlowLabError):
    """A declared growth decomposition failed to reproduce the field."""


class KernelScaleError(FlowLabError):
    """Kernel width is below the grid resolution; refine the grid."""


class BlowUpError(FlowLabError):
    """A trajectory left the finite range during integration."""

    def __init__(self, particle: int, time: float):
        self.particle = int(particle)
        self.time = float(time)
        super().__init__(
            f"trajectory blow-up: particle {self.particle} became non-finite "
            f"near t = {self.time:.6g}"
        )


class StepMismatchError(FlowLabError):
    """Record times are not integer multiples of the integration step."""


class ProbeResolutionError(FlowLabError):
    """Occupancy probe grid is coarser than the seeding grid."""


class EnsembleMismatchError(FlowLabError):
    """Two ensembles do not share initial nodes and record times."""


class InfeasibleScheduleError(FlowLabError):
    """No valid two-scale schedule exists for the requested inputs."""


class ConfigError(FlowLabError):
    """An experiment configuration file is missing or malformed."""
