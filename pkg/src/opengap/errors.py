"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A system, grid or experiment was set up inconsistently."""


class EscapeError(RuntimeError):
    """An orbit left the piece domains before the requested time."""

    def __init__(self, step, message=None):
        self.step = step
        super().__init__(message or f"escaped at step {step}")


class EmptyNeighborhoodError(RuntimeError):
    """A refined word neighborhood contains no usable point."""


class NumericalError(RuntimeError):
    """A numerical routine failed to converge or produced an invalid result."""
