"""Exception types raised by the solver and its front ends."""


class NlfvError(Exception):
    """Base class for all package-specific errors."""


class InvalidGeometryError(NlfvError, ValueError):
    """Degenerate domain extent, cell count, or lambda."""


class InvalidKernelError(NlfvError, ValueError):
    """Kernel support is empty or reversed."""


class InvalidDatumError(NlfvError, ValueError):
    """Initial-datum pieces overlap or are malformed."""


class UnknownModelError(NlfvError, ValueError):
    """Requested model name is not in the registry."""


class ConfigError(NlfvError, ValueError):
    """Run configuration failed to parse or validate."""


class StabilityError(NlfvError, ValueError):
    """Configuration violates the CFL or mesh condition."""


class BlowupError(NlfvError, RuntimeError):
    """A time step produced a non-finite cell value."""

    def __init__(self, step: int, cell: int):
        self.step = step
        self.cell = cell
        super().__init__(f"non-finite value at step {step}, interior cell {cell}")


class ConvolutionWindowError(NlfvError, RuntimeError):
    """Ghost region too narrow for the convolution window (programming bug)."""


class InvariantViolationError(NlfvError, RuntimeError):
    """A runtime invariant check failed in strict mode."""
