"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: I/O and parse failures -> 1,
invariant violations -> 2, bad arguments/shapes -> 3.
"""


class GestkitError(Exception):
    """Base class for all package errors."""


class ArgumentError(GestkitError, ValueError):
    """A caller-supplied value violates a precondition."""


class DimensionError(ArgumentError):
    """Operands have incompatible or non-conforming shapes."""


class DomainError(ArgumentError):
    """Input contains values outside the operation's domain (NaN/Inf)."""


class RankError(ArgumentError):
    """A matrix that must have full column rank does not."""


class DegenerateMotionError(GestkitError):
    """An articulator shows no measurable motion (leading variance ~ 0)."""

    def __init__(self, articulator: str, variance: float):
        self.articulator = articulator
        self.variance = variance
        super().__init__(
            f"articulator {articulator!r} is motionless "
            f"(leading variance {variance:.3e})"
        )


class InvariantError(GestkitError):
    """A produced value violates one of its declared invariants."""


class ParseError(GestkitError):
    """A file could not be parsed; carries position context when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InfeasibleTargetError(ArgumentError):
    """A CTC target cannot be aligned to the given number of frames."""


class StateError(GestkitError):
    """An object was used in a way its lifecycle forbids."""
