"""Exception types shared across the package."""


class PssimError(Exception):
    """Base class for all package-specific errors."""


class InvalidParamsError(PssimError, ValueError):
    """A parameter set violates its declared invariants."""


class SingularAngleError(PssimError, ValueError):
    """Requested operating angle too close to sin(angle) = 0."""


class NoRootError(PssimError, ValueError):
    """The equilibrium equation has no root in the search interval."""


class SingularStateError(PssimError, ValueError):
    """Coordinate inversion undefined: |sin(angle)| below the guard."""


class ArityMismatchError(PssimError, ValueError):
    """Crisp input count does not match the fuzzy system's input count."""


class InvalidDtError(PssimError, ValueError):
    """Time step too large for the discretized filter chain."""


class MissingConfigError(PssimError, ValueError):
    """The selected stabilizer has no configuration."""


class NonFiniteStateError(PssimError, RuntimeError):
    """Integration produced a non-finite state component."""

    def __init__(self, time: float, message: str = ""):
        self.time = time
        super().__init__(message or f"non-finite state at t = {time:.6f} s")


class MismatchedScenarioError(PssimError, ValueError):
    """Traces handed to the comparison do not share one scenario."""
