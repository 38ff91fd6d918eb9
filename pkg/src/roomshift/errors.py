"""Exception types shared across the package."""


class RoomshiftError(ValueError):
    """Base class for all argument/state errors raised by this package."""


class GeometryError(RoomshiftError):
    pass


class PlannerError(RoomshiftError):
    """Base for planning failures; carries the substream label when raised by plan_task."""

    def __init__(self, message, substream=None):
        if substream is not None:
            message = f"[{substream}] {message}"
        super().__init__(message)
        self.substream = substream


class UnreachableEndpointError(PlannerError):
    pass


class NoPathError(PlannerError):
    pass


class DegenerateInputError(RoomshiftError):
    pass


class DegenerateTargetError(RoomshiftError):
    pass


class DegenerateSideError(RoomshiftError):
    pass


class InvalidTaskError(RoomshiftError):
    pass


class InvalidActionError(RoomshiftError):
    pass


class InvalidCheckpointError(RoomshiftError):
    pass


class GenerationFailedError(RoomshiftError):
    pass


class DivergenceError(RuntimeError):
    """Training produced non-finite losses; maps to CLI exit code 4."""
