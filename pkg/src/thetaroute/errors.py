"""Exception hierarchy shared by every module."""


class ThetaRouteError(Exception):
    pass


class DegenerateInputError(ThetaRouteError, ValueError):
    """Coincident points, zero vectors, non-finite coordinates."""


class ContractViolation(ThetaRouteError, ValueError):
    """A documented precondition does not hold."""


class InvariantViolation(ThetaRouteError, RuntimeError):
    """A structural invariant failed; signals a construction bug."""


class DeadEnd(ThetaRouteError, RuntimeError):
    """A routing step needed a successor that does not exist."""


class CorridorExhausted(DeadEnd):
    """Side routing ran out of triangles crossing its line."""


class LocalityError(ThetaRouteError, LookupError):
    """A step function asked about a vertex outside its neighbourhood."""
